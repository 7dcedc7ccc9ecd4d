#include "fuplab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "fuplab/errors.hpp"

namespace fuplab {

namespace {
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}
}  // namespace

struct CenteredFft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

CenteredFft::CenteredFft(std::vector<int> dims) : dims_(std::move(dims)), plans_(new Plans) {
    if (dims_.empty() || dims_.size() > 2) throw ConfigError("fft supports one or two axes");
    total_ = 1;
    for (int n : dims_) {
        if (n <= 0 || n % 2 != 0) throw ConfigError("fft axis length must be positive and even");
        total_ *= static_cast<std::size_t>(n);
    }
    std::vector<cplx> scratch(total_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (dims_.size() == 1) {
        plans_->fwd = fftw_plan_dft_1d(dims_[0], buf, buf, FFTW_FORWARD, flags);
        plans_->bwd = fftw_plan_dft_1d(dims_[0], buf, buf, FFTW_BACKWARD, flags);
    } else {
        plans_->fwd = fftw_plan_dft_2d(dims_[0], dims_[1], buf, buf, FFTW_FORWARD, flags);
        plans_->bwd = fftw_plan_dft_2d(dims_[0], dims_[1], buf, buf, FFTW_BACKWARD, flags);
    }
}

CenteredFft::~CenteredFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
    if (plans_->bwd) fftw_destroy_plan(plans_->bwd);
}

// Rotation by n/2 on each axis; an involution because every length is even.
void CenteredFft::shift(std::vector<cplx>& a) const {
    if (dims_.size() == 1) {
        const std::size_t h = total_ / 2;
        for (std::size_t j = 0; j < h; ++j) std::swap(a[j], a[j + h]);
        return;
    }
    const std::size_t n0 = dims_[0], n1 = dims_[1];
    const std::size_t h0 = n0 / 2, h1 = n1 / 2;
    for (std::size_t i = 0; i < h0; ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
            std::swap(a[i * n1 + j], a[(i + h0) * n1 + (j + h1) % n1]);
        }
    }
}

void CenteredFft::run(std::vector<cplx>& a, bool fwd) const {
    if (a.size() != total_) throw ConfigError("fft input has wrong length");
    shift(a);
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(fwd ? plans_->fwd : plans_->bwd, p, p);
    shift(a);
    const double s = 1.0 / std::sqrt(static_cast<double>(total_));
    for (auto& v : a) v *= s;
}

struct Dft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

Dft::Dft(std::vector<int> dims) : dims_(std::move(dims)), plans_(new Plans) {
    if (dims_.empty() || dims_.size() > 2) throw ConfigError("dft supports one or two axes");
    total_ = 1;
    for (int n : dims_) {
        if (n <= 0) throw ConfigError("dft axis length must be positive");
        total_ *= static_cast<std::size_t>(n);
    }
    std::vector<cplx> scratch(total_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (dims_.size() == 1) {
        plans_->fwd = fftw_plan_dft_1d(dims_[0], buf, buf, FFTW_FORWARD, flags);
        plans_->bwd = fftw_plan_dft_1d(dims_[0], buf, buf, FFTW_BACKWARD, flags);
    } else {
        plans_->fwd = fftw_plan_dft_2d(dims_[0], dims_[1], buf, buf, FFTW_FORWARD, flags);
        plans_->bwd = fftw_plan_dft_2d(dims_[0], dims_[1], buf, buf, FFTW_BACKWARD, flags);
    }
}

Dft::~Dft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
    if (plans_->bwd) fftw_destroy_plan(plans_->bwd);
}

void Dft::forward(std::vector<cplx>& a) const {
    if (a.size() != total_) throw ConfigError("dft input has wrong length");
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(plans_->fwd, p, p);
}

void Dft::backward(std::vector<cplx>& a) const {
    if (a.size() != total_) throw ConfigError("dft input has wrong length");
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_execute_dft(plans_->bwd, p, p);
}

namespace {
// Smallest 2^a 3^b 5^c not below n.
std::size_t smooth_length(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best *= 2;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
            std::size_t v = p35;
            while (v < n) v *= 2;
            best = std::min(best, v);
        }
    return best;
}
}  // namespace

struct RealConvolver::Buffers {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    std::vector<cplx> kernel_spec;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

RealConvolver::RealConvolver(const std::vector<double>& kernel, std::size_t signal_length)
    : signal_length_(signal_length), buf_(new Buffers) {
    if (kernel.empty() || signal_length == 0) throw ConfigError("convolution needs nonempty inputs");
    full_length_ = kernel.size() + signal_length - 1;
    padded_ = smooth_length(full_length_);
    const std::size_t nspec = padded_ / 2 + 1;
    buf_->real = fftw_alloc_real(padded_);
    buf_->spec = fftw_alloc_complex(nspec);
    if (!buf_->real || !buf_->spec) throw ConfigError("convolution buffers could not be allocated");
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        buf_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(padded_), buf_->real, buf_->spec, FFTW_ESTIMATE);
        buf_->bwd = fftw_plan_dft_c2r_1d(static_cast<int>(padded_), buf_->spec, buf_->real, FFTW_ESTIMATE);
    }
    std::fill(buf_->real, buf_->real + padded_, 0.0);
    std::copy(kernel.begin(), kernel.end(), buf_->real);
    fftw_execute(buf_->fwd);
    buf_->kernel_spec.resize(nspec);
    const double scale = 1.0 / static_cast<double>(padded_);
    for (std::size_t i = 0; i < nspec; ++i)
        buf_->kernel_spec[i] = cplx(buf_->spec[i][0], buf_->spec[i][1]) * scale;
}

RealConvolver::~RealConvolver() {
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (buf_->fwd) fftw_destroy_plan(buf_->fwd);
        if (buf_->bwd) fftw_destroy_plan(buf_->bwd);
    }
    fftw_free(buf_->real);
    fftw_free(buf_->spec);
}

std::vector<double> RealConvolver::apply(const std::vector<double>& signal, std::size_t offset, std::size_t count) {
    if (signal.size() != signal_length_) throw ConfigError("convolution signal has wrong length");
    if (offset + count > full_length_) throw ConfigError("convolution output window out of range");
    std::fill(buf_->real, buf_->real + padded_, 0.0);
    std::copy(signal.begin(), signal.end(), buf_->real);
    fftw_execute(buf_->fwd);
    for (std::size_t i = 0; i < buf_->kernel_spec.size(); ++i) {
        const cplx v = cplx(buf_->spec[i][0], buf_->spec[i][1]) * buf_->kernel_spec[i];
        buf_->spec[i][0] = v.real();
        buf_->spec[i][1] = v.imag();
    }
    fftw_execute(buf_->bwd);
    return std::vector<double>(buf_->real + offset, buf_->real + offset + count);
}

void CenteredFft::forward(std::vector<cplx>& a) const { run(a, true); }
void CenteredFft::inverse(std::vector<cplx>& a) const { run(a, false); }

}  // namespace fuplab
