#pragma once

// Analytic electret-microphone frequency response: an electronic first-order
// high-pass followed by two acoustic second-order low-pass stages.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pamic {

enum class MicClass : int { ECM30B = 0, ECM60 = 1, WM66 = 2 };

inline constexpr std::size_t kNumClasses = 3;

constexpr int label_of(MicClass c) { return static_cast<int>(c); }

/// Throws InvalidParameter unless 0 <= label <= 2.
MicClass mic_class_from_label(int label);

std::string_view mic_class_name(MicClass c);

/// One microphone parameterization. Frequencies in Hz, dampings dimensionless.
struct MicParams {
    double f2 = 0.0;   // high-pass (RC) characteristic frequency
    double f3 = 0.0;   // first acoustic resonance
    double f4 = 0.0;   // second acoustic resonance
    double xi3 = 0.0;  // damping of the f3 stage
    double xi4 = 0.0;  // damping of the f4 stage

    /// Throws InvalidParameter if any frequency is not finite and positive or
    /// a damping lies outside (0, 1].
    void validate() const;

    friend bool operator==(const MicParams&, const MicParams&) = default;
};

using Complex = std::complex<double>;

/// Equally spaced sample frequencies, both endpoints included.
class FrequencyGrid {
public:
    FrequencyGrid() = default;

    /// `count` points from f_min to f_max inclusive. Requires
    /// 0 <= f_min < f_max and count >= 2.
    static FrequencyGrid linear(double f_min, double f_max, std::size_t count);

    /// 150 points on [20, 20000] Hz.
    static FrequencyGrid standard_full();
    /// 70 points on [800, 20000] Hz.
    static FrequencyGrid standard_restricted();

    double f_min() const { return f_min_; }
    double f_max() const { return f_max_; }
    std::size_t count() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    double operator[](std::size_t i) const { return points_[i]; }

    friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

private:
    double f_min_ = 0.0;
    double f_max_ = 0.0;
    std::vector<double> points_;
};

/// j*u / (1 + j*u), u = f / f2.
Complex hp_response(double f, double f2);

/// 1 / (1 - u^2 + 2j*xi*u), u = f / f0.
Complex lp2_response(double f, double f0, double xi);

/// Cascade hp(f2) * lp2(f3, xi3) * lp2(f4, xi4).
Complex mic_response(const MicParams& p, double f);

/// Stage phases in closed form. Their sum is continuous in f, so no unwrapping
/// pass is needed: hp in [0, pi/2], each low-pass stage in (-pi, 0].
double hp_phase(double f, double f2);
double lp2_phase(double f, double f0, double xi);

struct Sweep {
    std::vector<double> amplitude;
    std::vector<double> phase;  // radians
};

Sweep amplitude_phase_sweep(const MicParams& p, const FrequencyGrid& g);

/// Writes amplitudes into out[0..N) and phases into out[N..2N), N = g.count().
void sweep_into(const MicParams& p, const FrequencyGrid& g, std::span<double> out);

}  // namespace pamic
