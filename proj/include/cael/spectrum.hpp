#pragma once

#include <span>

#include "cael/image.hpp"

namespace cael {

// log(1 + |DFT2(gray)|) with the DC bin moved to (H/2, W/2).
Plane log_spectrum(const Image& img);

// Average of log_spectrum over images of identical size. Throws on an empty
// list or a size mismatch.
Plane mean_spectrum(std::span<const Image> imgs);

// Mean value over bins whose distance from the centre, divided by min(H,W)/2,
// lies in [inner, outer).
double annulus_mean(const Plane& centered, double inner, double outer);

}  // namespace cael
