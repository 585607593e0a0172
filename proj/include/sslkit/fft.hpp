// Thin wrapper around Eigen's FFT (kissfft backend). Forward transforms are
// unnormalized, matching the Parseval convention used by the tests:
//   sum x[n]^2 = (1/N) (|X[0]|^2 + 2 sum |X[k]|^2 + |X[N/2]|^2).
#pragma once

#include "sslkit/common.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace sslkit {

class Fft {
public:
    // One-sided spectrum of a real frame: N/2+1 bins.
    CVec rfft(const RealVec& x) {
        fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
        std::vector<Complex> out;
        std::vector<double> in(x.data(), x.data() + x.size());
        fft_.fwd(out, in);
        return Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

    CVec fwd(const CVec& x) {
        std::vector<Complex> out, in(x.data(), x.data() + x.size());
        fft_.fwd(out, in);
        return Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

    CVec inv(const CVec& x) {
        std::vector<Complex> out, in(x.data(), x.data() + x.size());
        fft_.inv(out, in);
        return Eigen::Map<CVec>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

private:
    Eigen::FFT<double> fft_;
};

// Linear convolution via one zero-padded power-of-two FFT.
inline RealVec fft_convolve(const RealVec& x, const RealVec& h) {
    const Eigen::Index n = x.size() + h.size() - 1;
    Eigen::Index nfft = 1;
    while (nfft < n) nfft <<= 1;
    CVec xa = CVec::Zero(nfft), ha = CVec::Zero(nfft);
    xa.head(x.size()) = x.cast<Complex>();
    ha.head(h.size()) = h.cast<Complex>();
    Fft fft;
    CVec prod = fft.fwd(xa).cwiseProduct(fft.fwd(ha));
    CVec full = fft.inv(prod);
    return full.head(n).real();
}

}  // namespace sslkit
