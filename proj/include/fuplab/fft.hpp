#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace fuplab {

using cplx = std::complex<double>;

// Unitary DFT on a centered grid. Sample j along an axis of length n sits at
// index offset (j - n/2); forward applies n^{-1/2} sum_j a_j e^{-2 pi i (j-n/2)(l-n/2)/n}.
// One or two axes, row-major, every length even.
class CenteredFft {
public:
    explicit CenteredFft(std::vector<int> dims);
    ~CenteredFft();
    CenteredFft(const CenteredFft&) = delete;
    CenteredFft& operator=(const CenteredFft&) = delete;

    void forward(std::vector<cplx>& a) const;
    void inverse(std::vector<cplx>& a) const;

    const std::vector<int>& dims() const { return dims_; }
    std::size_t size() const { return total_; }

private:
    void shift(std::vector<cplx>& a) const;
    void run(std::vector<cplx>& a, bool fwd) const;

    std::vector<int> dims_;
    std::size_t total_ = 0;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

// Unnormalized DFT of any lengths on one or two axes, row-major, indices from 0:
// a_l -> sum_j a_j e^{sign 2 pi i j l / n}, sign = -1 (forward) or +1 (backward).
class Dft {
public:
    explicit Dft(std::vector<int> dims);
    ~Dft();
    Dft(const Dft&) = delete;
    Dft& operator=(const Dft&) = delete;

    void forward(std::vector<cplx>& a) const;
    void backward(std::vector<cplx>& a) const;

    const std::vector<int>& dims() const { return dims_; }
    std::size_t size() const { return total_; }

private:
    std::vector<int> dims_;
    std::size_t total_ = 0;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

// Linear convolution of real sequences with a fixed kernel through one padded
// real FFT. Holds its work buffers, so one instance serves one thread.
class RealConvolver {
public:
    RealConvolver(const std::vector<double>& kernel, std::size_t signal_length);
    ~RealConvolver();
    RealConvolver(const RealConvolver&) = delete;
    RealConvolver& operator=(const RealConvolver&) = delete;

    // Entries [offset, offset + count) of the full convolution (length signal + kernel - 1).
    std::vector<double> apply(const std::vector<double>& signal, std::size_t offset, std::size_t count);

    std::size_t padded_length() const { return padded_; }

private:
    std::size_t signal_length_ = 0;
    std::size_t full_length_ = 0;
    std::size_t padded_ = 0;
    struct Buffers;
    std::unique_ptr<Buffers> buf_;
};

}  // namespace fuplab
