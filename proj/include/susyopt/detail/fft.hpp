#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>

#include <fftw3.h>

namespace susyopt::detail {

// Unnormalized in-place complex DFTs of length n. Plans are created once per
// (size, direction) and shared; fftw_execute_dft on fresh arrays is
// thread-safe, plan creation is not, hence the mutex.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    void forward(std::span<std::complex<double>> data) { execute(data, FFTW_FORWARD); }
    void backward(std::span<std::complex<double>> data) { execute(data, FFTW_BACKWARD); }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    struct PlanDeleter {
        void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
    };
    using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

    FftPlans() = default;

    fftw_plan plan_for(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto& slot = plans_[{n, sign}];
        if (!slot) {
            auto* buf = fftw_alloc_complex(static_cast<size_t>(n));
            slot.reset(fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED));
            fftw_free(buf);
        }
        return slot.get();
    }

    void execute(std::span<std::complex<double>> data, int sign) {
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan_for(static_cast<int>(data.size()), sign), p, p);
    }

    std::mutex mutex_;
    std::map<std::pair<int, int>, Plan> plans_;
};

inline void fft_forward(std::span<std::complex<double>> data) { FftPlans::instance().forward(data); }
inline void fft_backward(std::span<std::complex<double>> data) { FftPlans::instance().backward(data); }

}  // namespace susyopt::detail
