#include "beamsplit/fft.hpp"

#include <cstring>
#include <mutex>
#include <new>
#include <stdexcept>
#include <utility>

#include <fftw3.h>

namespace beamsplit {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Eigen::VectorXcd& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

// Plans are made for SIMD-aligned buffers; anything else goes through a copy.
bool plan_compatible(Eigen::VectorXcd& v) {
  return fftw_alignment_of(reinterpret_cast<double*>(v.data())) == 0;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  fftw_complex* scratch = fftw_alloc_complex(n);
  if (!scratch) throw std::bad_alloc();
  // Measured plans are remembered as wisdom, so only the first plan of a size is slow.
  const unsigned flags = FFTW_MEASURE;
  forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_BACKWARD, flags);
  fftw_free(scratch);
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("FFTW planning failed");
}

Fft::~Fft() {
  if (!forward_plan_ && !inverse_plan_) return;
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

Fft& Fft::operator=(Fft&& other) noexcept {
  std::swap(n_, other.n_);
  std::swap(forward_plan_, other.forward_plan_);
  std::swap(inverse_plan_, other.inverse_plan_);
  return *this;
}

void Fft::execute(void* plan, Eigen::VectorXcd& data) const {
  if (plan_compatible(data)) {
    fftw_execute_dft(static_cast<fftw_plan>(plan), as_fftw(data), as_fftw(data));
    return;
  }
  fftw_complex* buf = fftw_alloc_complex(n_);
  if (!buf) throw std::bad_alloc();
  std::memcpy(buf, data.data(), n_ * sizeof(fftw_complex));
  fftw_execute_dft(static_cast<fftw_plan>(plan), buf, buf);
  std::memcpy(static_cast<void*>(data.data()), buf, n_ * sizeof(fftw_complex));
  fftw_free(buf);
}

void Fft::forward(Eigen::VectorXcd& data) const {
  if (static_cast<std::size_t>(data.size()) != n_) throw std::invalid_argument("FFT size mismatch");
  execute(forward_plan_, data);
}

void Fft::inverse(Eigen::VectorXcd& data) const {
  if (static_cast<std::size_t>(data.size()) != n_) throw std::invalid_argument("FFT size mismatch");
  execute(inverse_plan_, data);
  data *= 1.0 / static_cast<double>(n_);
}

}  // namespace beamsplit
