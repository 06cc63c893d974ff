#pragma once

// Thin FFTW wrapper. Plans are created once per (size, kind) under a lock and
// executed through the new-array interface, which FFTW documents as thread-safe.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace spectemp::fft {

using cplx = std::complex<double>;

namespace detail {

enum class PlanKind { R2C, C2CForward, C2CBackward };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, int n) {
    std::lock_guard lock(mu_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = nullptr;
    std::vector<double> rin(static_cast<std::size_t>(n));
    std::vector<cplx> cin(static_cast<std::size_t>(n)), cout(static_cast<std::size_t>(n));
    auto* cin_p = reinterpret_cast<fftw_complex*>(cin.data());
    auto* cout_p = reinterpret_cast<fftw_complex*>(cout.data());
    switch (kind) {
      case PlanKind::R2C: p = fftw_plan_dft_r2c_1d(n, rin.data(), cout_p, flags); break;
      case PlanKind::C2CForward: p = fftw_plan_dft_1d(n, cin_p, cout_p, FFTW_FORWARD, flags); break;
      case PlanKind::C2CBackward: p = fftw_plan_dft_1d(n, cin_p, cout_p, FFTW_BACKWARD, flags); break;
    }
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mu_;
  std::map<std::pair<PlanKind, int>, fftw_plan> plans_;
};

}  // namespace detail

/// One-sided DFT of a real sequence: n/2 + 1 bins, unnormalized.
inline std::vector<cplx> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> out(x.size() / 2 + 1);
  if (n == 0) return out;
  std::vector<double> in(x.begin(), x.end());  // FFTW may clobber r2c input
  fftw_plan p = detail::PlanCache::instance().get(detail::PlanKind::R2C, n);
  fftw_execute_dft_r2c(p, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Complex DFT; inverse is unnormalized too (caller divides by n).
inline std::vector<cplx> dft(std::span<const cplx> x, bool inverse = false) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> out(x.size());
  if (n == 0) return out;
  std::vector<cplx> in(x.begin(), x.end());
  auto kind = inverse ? detail::PlanKind::C2CBackward : detail::PlanKind::C2CForward;
  fftw_plan p = detail::PlanCache::instance().get(kind, n);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Periodic Hann window of length n.
inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  constexpr double two_pi = 6.283185307179586476925286766559;
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

}  // namespace spectemp::fft
