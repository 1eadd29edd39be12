#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace regulab {

/// Thin FFTW wrapper.  Plan creation/destruction is serialized behind a mutex
/// (FFTW's planner is not thread-safe); FFTW_ESTIMATE keeps planning
/// deterministic for a given build.  Transforms are unnormalized, matching
/// FFTW's convention; callers divide by the total size after a round trip.
namespace fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place N-dimensional complex DFT over a row-major array.
inline void transform(std::vector<std::complex<double>>& a, const std::vector<std::size_t>& shape,
                      bool forward) {
  std::size_t total = 1;
  for (std::size_t s : shape) total *= s;
  if (a.size() != total) throw std::invalid_argument("fft::transform: shape/total mismatch");
  if (total == 0) return;
  std::vector<int> dims(shape.begin(), shape.end());
  auto* data = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), data, data,
                         forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("fft::transform: planner failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
}

/// Full linear convolution of two real row-major N-d arrays; the result has
/// shape sa+sb-1 per axis.  Exact zero padding, no circular wrap-around.
inline std::vector<double> convolve_full(const std::vector<double>& a,
                                         const std::vector<std::size_t>& sa,
                                         const std::vector<double>& b,
                                         const std::vector<std::size_t>& sb) {
  if (sa.size() != sb.size() || sa.empty())
    throw std::invalid_argument("fft::convolve_full: rank mismatch");
  const std::size_t rank = sa.size();
  std::vector<std::size_t> so(rank);
  std::size_t total = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    if (sa[d] == 0 || sb[d] == 0) throw std::invalid_argument("fft::convolve_full: empty axis");
    so[d] = sa[d] + sb[d] - 1;
    total *= so[d];
  }

  auto embed = [&](const std::vector<double>& src, const std::vector<std::size_t>& ss) {
    std::vector<std::complex<double>> dst(total, {0.0, 0.0});
    std::vector<std::size_t> idx(rank, 0);
    std::size_t n = 1;
    for (std::size_t s : ss) n *= s;
    for (std::size_t flat = 0; flat < n; ++flat) {
      std::size_t rem = flat, out = 0;
      for (std::size_t d = rank; d-- > 0;) {
        idx[d] = rem % ss[d];
        rem /= ss[d];
      }
      for (std::size_t d = 0; d < rank; ++d) out = out * so[d] + idx[d];
      dst[out] = {src[flat], 0.0};
    }
    return dst;
  };

  std::size_t na = 1, nb = 1;
  for (std::size_t s : sa) na *= s;
  for (std::size_t s : sb) nb *= s;
  if (a.size() != na || b.size() != nb)
    throw std::invalid_argument("fft::convolve_full: data/shape mismatch");

  auto fa = embed(a, sa);
  auto fb = embed(b, sb);
  transform(fa, so, true);
  transform(fb, so, true);
  for (std::size_t i = 0; i < total; ++i) fa[i] *= fb[i];
  transform(fa, so, false);
  std::vector<double> out(total);
  const double scale = 1.0 / static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = fa[i].real() * scale;
  return out;
}

}  // namespace fft
}  // namespace regulab
