#pragma once

#include <complex>

namespace pnsim {

using cdouble = std::complex<double>;

// Tikhonov (von Mises) circular density
//
//   t(theta; z) = exp(Re[z e^{-j theta}]) / (2 pi I0(|z|))
//
// |z| is the concentration, arg(z) the mean direction, z = 0 the uniform
// density.
struct Tikhonov {
    cdouble z{0.0, 0.0};
};

// Zero-mean Gaussian of std `sigma` wrapped onto [0, 2pi), truncated to
// `truncation` wraps on each side. truncation = 5 keeps the tail error
// below 1e-10 for sigma <= 0.5.
struct WrappedGaussian {
    double sigma = 0.1;
    int truncation = 5;
};

// ln I0(x), relative error <= 1e-10 over [0, 1e6]. Rejects negative x.
double log_bessel_i0(double x);

// ln I1(x) for x > 0 (I1(0) = 0, so returns -inf at x = 0).
double log_bessel_i1(double x);

// I1(x)/I0(x): the mean resultant length of a Tikhonov density with
// concentration x.
double bessel_i1_i0_ratio(double x);

// Inverse of bessel_i1_i0_ratio: concentration whose mean resultant length
// is r, for r in [0, 1). Values of r at or above 1 - 1e-14 are clamped.
double concentration_for_resultant(double r);

// t(theta; a) * t(theta; b) = exp(log_scale) * t(theta; a + b)
struct TikhonovProduct {
    Tikhonov t;
    double log_scale;
};
TikhonovProduct tikhonov_multiply(Tikhonov a, Tikhonov b);

// Tikhonov-preserving approximation to circular convolution with the
// wrapped Gaussian of per-step variance sigma_delta^2:
//
//   z -> z / (1 + sigma_delta^2 |z|)
//
// Shrinkage only: |z'| <= |z|, exact for sigma_delta = 0.
Tikhonov tikhonov_convolve_wrapped_gaussian(Tikhonov t, double sigma_delta);

// Observation likelihood exp(-|r - c e^{j theta}|^2 / (2 sigma^2)) viewed
// as a function of theta:
//
//   f(theta) = exp(log_prefactor + Re[z e^{-j theta}])
//
// with z = r conj(c) / sigma^2 and log_prefactor = -(|r|^2+|c|^2)/(2 sigma^2).
struct ObservationFactor {
    cdouble z;
    double log_prefactor;
};
ObservationFactor observation_factor(cdouble r, cdouble c, double noise_var);

double wrapped_gaussian_pdf(double theta, const WrappedGaussian& p);

double tikhonov_log_pdf(double theta, Tikhonov t);
double tikhonov_pdf(double theta, Tikhonov t);

} // namespace pnsim
