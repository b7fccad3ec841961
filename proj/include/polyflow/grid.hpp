#pragma once

// Periodic sampled domains (circle or flat 2-torus in coordinates) and the
// derivative operators every other module is built on.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "polyflow/error.hpp"

namespace polyflow {

enum class Differentiation { CentralFD2, CentralFD4, Spectral };

inline std::string_view to_string(Differentiation d) {
  switch (d) {
    case Differentiation::CentralFD2: return "CentralFD2";
    case Differentiation::CentralFD4: return "CentralFD4";
    case Differentiation::Spectral: return "Spectral";
  }
  return "?";
}

struct GridSpec {
  int dims = 1;
  std::vector<int> sizes{256};
  std::vector<double> lengths{2.0 * std::numbers::pi};
  Differentiation differentiation = Differentiation::Spectral;
  // Spectral only: Fourier amplitudes below chop * max(line amplitude, field
  // scale) are discarded before differentiating.
  double spectral_chop = 1e-15;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

/// r2c/c2r pair for one periodic line, used for spectral first derivatives.
class SpectralLine {
 public:
  SpectralLine(int n, double length) : n_(n), wavenumber_(static_cast<std::size_t>(n / 2 + 1)) {
    for (int k = 0; k <= n / 2; ++k)
      wavenumber_[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / length;
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n))));
    spec_.reset(static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n / 2 + 1))));
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_.get(), spec_.get(), FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n, spec_.get(), real_.get(), FFTW_ESTIMATE);
  }
  SpectralLine(const SpectralLine&) = delete;
  SpectralLine& operator=(const SpectralLine&) = delete;
  ~SpectralLine() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void derivative(const double* in, std::size_t stride_in, double* out, std::size_t stride_out,
                  double chop, double floor) {
    std::lock_guard lock(mu_);
    const std::size_t n = static_cast<std::size_t>(n_);
    for (std::size_t i = 0; i < n; ++i) real_[i] = in[i * stride_in];
    fftw_execute(forward_);
    const std::size_t half = n / 2;
    double max_amp = 0.0;
    for (std::size_t k = 0; k <= half; ++k) max_amp = std::max(max_amp, amplitude(k));
    const double threshold = chop * std::max(max_amp, floor);
    for (std::size_t k = 0; k <= half; ++k) {
      const double re = spec_[k][0];
      const double im = spec_[k][1];
      const bool nyquist = (n % 2 == 0) && k == half;
      if (nyquist || amplitude(k) <= threshold) {
        spec_[k][0] = 0.0;
        spec_[k][1] = 0.0;
        continue;
      }
      const double w = wavenumber_[k] / static_cast<double>(n);
      spec_[k][0] = -w * im;
      spec_[k][1] = w * re;
    }
    fftw_execute(backward_);
    for (std::size_t i = 0; i < n; ++i) out[i * stride_out] = real_[i];
  }

 private:
  double amplitude(std::size_t k) const {
    const double n = static_cast<double>(n_);
    const double mag = std::hypot(spec_[k][0], spec_[k][1]);
    const bool edge = k == 0 || (n_ % 2 == 0 && k == static_cast<std::size_t>(n_ / 2));
    return mag * (edge ? 1.0 : 2.0) / n;
  }

  int n_;
  std::vector<double> wavenumber_;
  std::unique_ptr<double[], FftwFree> real_;
  std::unique_ptr<fftw_complex[], FftwFree> spec_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::mutex mu_;
};

/// Whole-field r2c/c2r transform (1-D or 2-D) for Fourier multipliers.
class SpectralField {
 public:
  SpectralField(const std::vector<int>& sizes, const std::vector<double>& lengths)
      : sizes_(sizes), lengths_(lengths) {
    const std::size_t n0 = static_cast<std::size_t>(sizes[0]);
    const std::size_t n1 = sizes.size() > 1 ? static_cast<std::size_t>(sizes[1]) : 1;
    real_count_ = n0 * n1;
    complex_count_ = (n0 / 2 + 1) * n1;
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * real_count_)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * complex_count_)));
    std::lock_guard lock(fftw_planner_mutex());
    if (sizes.size() == 1) {
      forward_ = fftw_plan_dft_r2c_1d(sizes[0], real_.get(), spec_.get(), FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_1d(sizes[0], spec_.get(), real_.get(), FFTW_ESTIMATE);
    } else {
      // Axis 0 is the fast index, so FFTW sees (n1, n0) in row-major order.
      forward_ = fftw_plan_dft_r2c_2d(sizes[1], sizes[0], real_.get(), spec_.get(), FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_2d(sizes[1], sizes[0], spec_.get(), real_.get(), FFTW_ESTIMATE);
    }
  }
  SpectralField(const SpectralField&) = delete;
  SpectralField& operator=(const SpectralField&) = delete;
  ~SpectralField() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  /// Applies the multiplier m(|kappa|^2) to component `comp` of a node-major field.
  template <typename Multiplier>
  void apply(std::span<double> values, std::size_t ncomp, std::size_t comp, Multiplier&& m) {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < real_count_; ++i) real_[i] = values[i * ncomp + comp];
    fftw_execute(forward_);
    const std::size_t n0 = static_cast<std::size_t>(sizes_[0]);
    const std::size_t half0 = n0 / 2 + 1;
    const std::size_t n1 = sizes_.size() > 1 ? static_cast<std::size_t>(sizes_[1]) : 1;
    for (std::size_t j1 = 0; j1 < n1; ++j1) {
      double k1 = 0.0;
      if (sizes_.size() > 1) {
        const long signed_j = j1 <= n1 / 2 ? static_cast<long>(j1) : static_cast<long>(j1) - static_cast<long>(n1);
        k1 = 2.0 * std::numbers::pi * static_cast<double>(signed_j) / lengths_[1];
      }
      for (std::size_t j0 = 0; j0 < half0; ++j0) {
        const double k0 = 2.0 * std::numbers::pi * static_cast<double>(j0) / lengths_[0];
        const double f = m(k0 * k0 + k1 * k1) / static_cast<double>(real_count_);
        spec_[j1 * half0 + j0][0] *= f;
        spec_[j1 * half0 + j0][1] *= f;
      }
    }
    fftw_execute(backward_);
    for (std::size_t i = 0; i < real_count_; ++i) values[i * ncomp + comp] = real_[i];
  }

 private:
  std::vector<int> sizes_;
  std::vector<double> lengths_;
  std::size_t real_count_ = 0;
  std::size_t complex_count_ = 0;
  std::unique_ptr<double[], FftwFree> real_;
  std::unique_ptr<fftw_complex[], FftwFree> spec_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::mutex mu_;
};

}  // namespace detail

/// Periodic grid with node-major storage: node = i0 + sizes[0] * i1, and a
/// field with k components keeps node j's values at [j*k, j*k + k).
class DomainGrid {
 public:
  explicit DomainGrid(GridSpec spec) : spec_(std::move(spec)) {
    if (spec_.dims != 1 && spec_.dims != 2)
      throw Error(ErrorCode::InvalidSpec, "dims must be 1 or 2");
    if (spec_.sizes.size() != static_cast<std::size_t>(spec_.dims) ||
        spec_.lengths.size() != static_cast<std::size_t>(spec_.dims))
      throw Error(ErrorCode::InvalidSpec, "sizes and lengths must have one entry per axis");
    for (int a = 0; a < spec_.dims; ++a) {
      if (spec_.sizes[a] < 16) throw Error(ErrorCode::InvalidSpec, "at least 16 nodes per axis");
      if (!(spec_.lengths[a] > 0.0) || !std::isfinite(spec_.lengths[a]))
        throw Error(ErrorCode::InvalidSpec, "axis lengths must be positive");
      spacing_[a] = spec_.lengths[a] / spec_.sizes[a];
    }
    if (!(spec_.spectral_chop >= 0.0) || spec_.spectral_chop > 1e-6)
      throw Error(ErrorCode::InvalidSpec, "spectral_chop must lie in [0, 1e-6]");
    node_count_ = static_cast<std::size_t>(spec_.sizes[0]) *
                  (spec_.dims == 2 ? static_cast<std::size_t>(spec_.sizes[1]) : 1);
    for (int a = 0; a < spec_.dims; ++a)
      lines_[a] = std::make_shared<detail::SpectralLine>(spec_.sizes[a], spec_.lengths[a]);
    field_ = std::make_shared<detail::SpectralField>(spec_.sizes, spec_.lengths);
  }

  const GridSpec& spec() const { return spec_; }
  int dims() const { return spec_.dims; }
  int size(int axis) const { return spec_.sizes[axis]; }
  double length(int axis) const { return spec_.lengths[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t node_count() const { return node_count_; }
  Differentiation differentiation() const { return spec_.differentiation; }

  double max_spacing() const {
    return spec_.dims == 2 ? std::max(spacing_[0], spacing_[1]) : spacing_[0];
  }

  /// Volume of one grid cell (product of spacings).
  double cell_volume() const {
    return spec_.dims == 2 ? spacing_[0] * spacing_[1] : spacing_[0];
  }

  std::array<int, 2> multi_index(std::size_t node) const {
    const int n0 = spec_.sizes[0];
    return {static_cast<int>(node % static_cast<std::size_t>(n0)),
            static_cast<int>(node / static_cast<std::size_t>(n0))};
  }

  std::size_t node_at(int i0, int i1 = 0) const {
    const int n0 = spec_.sizes[0];
    const int w0 = ((i0 % n0) + n0) % n0;
    int w1 = 0;
    if (spec_.dims == 2) {
      const int n1 = spec_.sizes[1];
      w1 = ((i1 % n1) + n1) % n1;
    }
    return static_cast<std::size_t>(w0) + static_cast<std::size_t>(n0) * static_cast<std::size_t>(w1);
  }

  double coordinate(std::size_t node, int axis) const {
    return multi_index(node)[static_cast<std::size_t>(axis)] * spacing_[axis];
  }

  /// Nominal convergence order; 0 means spectral.
  int order() const {
    switch (spec_.differentiation) {
      case Differentiation::CentralFD2: return 2;
      case Differentiation::CentralFD4: return 4;
      case Differentiation::Spectral: return 0;
    }
    return 0;
  }

  /// d/dx_axis of every component of a node-major field with `ncomp` components.
  /// `noise_scale` is the magnitude the field's roundoff is relative to (spectral chop only).
  void derivative(int axis, std::span<const double> in, std::size_t ncomp, std::span<double> out,
                  double noise_scale = 0.0) const {
    const std::size_t n0 = static_cast<std::size_t>(spec_.sizes[0]);
    const std::size_t n1 = spec_.dims == 2 ? static_cast<std::size_t>(spec_.sizes[1]) : 1;
    const std::size_t len = axis == 0 ? n0 : n1;
    const std::size_t lines = axis == 0 ? n1 : n0;
    const std::size_t stride = (axis == 0 ? 1 : n0) * ncomp;
    for (std::size_t line = 0; line < lines; ++line) {
      const std::size_t base_node = axis == 0 ? line * n0 : line;
      for (std::size_t c = 0; c < ncomp; ++c) {
        const std::size_t offset = base_node * ncomp + c;
        line_derivative(axis, len, in.data() + offset, out.data() + offset, stride, noise_scale);
      }
    }
  }

  std::vector<double> derivative(int axis, std::span<const double> in, std::size_t ncomp,
                                 double noise_scale = 0.0) const {
    std::vector<double> out(in.size());
    derivative(axis, in, ncomp, out, noise_scale);
    return out;
  }

  /// In place: every component <- (1 + ell^2 |kappa|^2)^(-power) applied in Fourier space.
  void sobolev_smooth(std::span<double> values, std::size_t ncomp, int power, double ell) const {
    const double ell2 = ell * ell;
    for (std::size_t c = 0; c < ncomp; ++c)
      field_->apply(values, ncomp, c,
                    [&](double k2) { return std::pow(1.0 + ell2 * k2, -static_cast<double>(power)); });
  }

 private:
  void line_derivative(int axis, std::size_t len, const double* in, double* out, std::size_t stride,
                       double noise_scale) const {
    const double h = spacing_[axis];
    switch (spec_.differentiation) {
      case Differentiation::Spectral:
        lines_[axis]->derivative(in, stride, out, stride, spec_.spectral_chop, noise_scale);
        return;
      case Differentiation::CentralFD2: {
        std::vector<double> f(len);
        for (std::size_t i = 0; i < len; ++i) f[i] = in[i * stride];
        for (std::size_t i = 0; i < len; ++i) {
          const double fp = f[(i + 1) % len];
          const double fm = f[(i + len - 1) % len];
          out[i * stride] = (fp - fm) / (2.0 * h);
        }
        return;
      }
      case Differentiation::CentralFD4: {
        std::vector<double> f(len);
        for (std::size_t i = 0; i < len; ++i) f[i] = in[i * stride];
        for (std::size_t i = 0; i < len; ++i) {
          const double fp1 = f[(i + 1) % len];
          const double fp2 = f[(i + 2) % len];
          const double fm1 = f[(i + len - 1) % len];
          const double fm2 = f[(i + len - 2) % len];
          out[i * stride] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        }
        return;
      }
    }
  }

  GridSpec spec_;
  std::array<double, 2> spacing_{0.0, 0.0};
  std::size_t node_count_ = 0;
  std::array<std::shared_ptr<detail::SpectralLine>, 2> lines_;
  std::shared_ptr<detail::SpectralField> field_;
};

inline std::shared_ptr<const DomainGrid> build_grid(const GridSpec& spec) {
  return std::make_shared<const DomainGrid>(spec);
}

}  // namespace polyflow
