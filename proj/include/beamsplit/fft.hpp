#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace beamsplit {

/// In-place complex FFT of a fixed length, backed by FFTW. Not thread-safe per
/// instance; construct one per worker. The inverse is normalised by 1/n.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept;
  Fft& operator=(Fft&& other) noexcept;

  std::size_t size() const { return n_; }
  void forward(Eigen::VectorXcd& data) const;
  void inverse(Eigen::VectorXcd& data) const;

 private:
  void execute(void* plan, Eigen::VectorXcd& data) const;

  std::size_t n_ = 0;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace beamsplit
