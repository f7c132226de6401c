#ifndef RHOSPHERE_FFT_HPP
#define RHOSPHERE_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace rhosphere::fft {

/// Real-to-complex transform pair of a fixed length, shared across threads.
///
/// Plans are created once per length under a global lock. Execution goes
/// through the new-array interface on caller-owned buffers.
class Plan {
public:
    explicit Plan(std::size_t n) : n_(n) {
        std::vector<double> re(n);
        std::vector<std::complex<double>> co(n / 2 + 1);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), re.data(),
                                        reinterpret_cast<fftw_complex*>(co.data()), flags);
        backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                                         reinterpret_cast<fftw_complex*>(co.data()),
                                         re.data(), flags);
        if (forward_ == nullptr || backward_ == nullptr)
            throw std::runtime_error("fftw: plan creation failed");
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    std::size_t size() const { return n_; }

    /// Unnormalized forward transform; returns n/2+1 coefficients.
    std::vector<std::complex<double>> forward(std::span<const double> in) const {
        std::vector<double> buf(in.begin(), in.end());
        std::vector<std::complex<double>> out(n_ / 2 + 1);
        fftw_execute_dft_r2c(forward_, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
        return out;
    }

    /// Inverse transform including the 1/n normalization.
    std::vector<double> backward(std::span<const std::complex<double>> in) const {
        std::vector<std::complex<double>> buf(in.begin(), in.end());
        std::vector<double> out(n_);
        fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(buf.data()), out.data());
        const double scale = 1.0 / static_cast<double>(n_);
        for (double& v : out) v *= scale;
        return out;
    }

private:
    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Process-wide plan for length n. Plans live until exit.
inline const Plan& plan_for(std::size_t n) {
    static std::map<std::size_t, std::unique_ptr<Plan>> cache;
    std::lock_guard lock(planner_mutex());
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

}  // namespace rhosphere::fft

#endif  // RHOSPHERE_FFT_HPP
