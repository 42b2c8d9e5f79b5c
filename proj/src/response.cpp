#include "pamic/response.hpp"

#include <cmath>
#include <string>

#include "pamic/error.hpp"

namespace pamic {

namespace {

void require_frequency(double f) {
    if (!std::isfinite(f) || f < 0.0) {
        throw InvalidParameter("frequency must be finite and non-negative, got " +
                               std::to_string(f));
    }
}

void require_corner(double f0, const char* what) {
    if (!std::isfinite(f0) || f0 <= 0.0) {
        throw InvalidParameter(std::string(what) + " must be finite and positive, got " +
                               std::to_string(f0));
    }
}

void require_damping(double xi, const char* what) {
    if (!std::isfinite(xi) || xi <= 0.0 || xi > 1.0) {
        throw InvalidParameter(std::string(what) + " must lie in (0, 1], got " +
                               std::to_string(xi));
    }
}

}  // namespace

MicClass mic_class_from_label(int label) {
    if (label < 0 || label >= static_cast<int>(kNumClasses)) {
        throw InvalidParameter("class label must be 0, 1 or 2, got " + std::to_string(label));
    }
    return static_cast<MicClass>(label);
}

std::string_view mic_class_name(MicClass c) {
    switch (c) {
        case MicClass::ECM30B: return "ECM30B";
        case MicClass::ECM60: return "ECM60";
        case MicClass::WM66: return "WM66";
    }
    return "?";
}

void MicParams::validate() const {
    require_corner(f2, "f2");
    require_corner(f3, "f3");
    require_corner(f4, "f4");
    require_damping(xi3, "xi3");
    require_damping(xi4, "xi4");
}

FrequencyGrid FrequencyGrid::linear(double f_min, double f_max, std::size_t count) {
    if (!std::isfinite(f_min) || !std::isfinite(f_max) || f_min < 0.0 || f_max <= f_min) {
        throw InvalidParameter("frequency grid needs 0 <= f_min < f_max");
    }
    if (count < 2) {
        throw InvalidParameter("frequency grid needs at least 2 points");
    }
    FrequencyGrid g;
    g.f_min_ = f_min;
    g.f_max_ = f_max;
    g.points_.resize(count);
    const double step = (f_max - f_min) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        g.points_[i] = f_min + step * static_cast<double>(i);
    }
    g.points_.back() = f_max;
    return g;
}

FrequencyGrid FrequencyGrid::standard_full() { return linear(20.0, 20000.0, 150); }

FrequencyGrid FrequencyGrid::standard_restricted() { return linear(800.0, 20000.0, 70); }

Complex hp_response(double f, double f2) {
    require_frequency(f);
    require_corner(f2, "f2");
    const double u = f / f2;
    const Complex ju(0.0, u);
    return ju / (1.0 + ju);
}

Complex lp2_response(double f, double f0, double xi) {
    require_frequency(f);
    require_corner(f0, "resonance frequency");
    require_damping(xi, "damping");
    const double u = f / f0;
    return 1.0 / Complex(1.0 - u * u, 2.0 * xi * u);
}

Complex mic_response(const MicParams& p, double f) {
    p.validate();
    return hp_response(f, p.f2) * lp2_response(f, p.f3, p.xi3) * lp2_response(f, p.f4, p.xi4);
}

double hp_phase(double f, double f2) {
    require_frequency(f);
    require_corner(f2, "f2");
    // arg(ju) - arg(1 + ju) = pi/2 - atan(u) = atan2(1, u)
    return std::atan2(1.0, f / f2);
}

double lp2_phase(double f, double f0, double xi) {
    require_frequency(f);
    require_corner(f0, "resonance frequency");
    require_damping(xi, "damping");
    const double u = f / f0;
    return 0.0 - std::atan2(2.0 * xi * u, 1.0 - u * u);
}

void sweep_into(const MicParams& p, const FrequencyGrid& g, std::span<double> out) {
    const std::size_t n = g.count();
    if (out.size() != 2 * n) {
        throw DimensionError("sweep output needs " + std::to_string(2 * n) + " slots, got " +
                             std::to_string(out.size()));
    }
    p.validate();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = g[i];
        out[i] = std::abs(mic_response(p, f));
        out[n + i] = hp_phase(f, p.f2) + lp2_phase(f, p.f3, p.xi3) + lp2_phase(f, p.f4, p.xi4);
    }
}

Sweep amplitude_phase_sweep(const MicParams& p, const FrequencyGrid& g) {
    const std::size_t n = g.count();
    std::vector<double> buf(2 * n);
    sweep_into(p, g, buf);
    Sweep s;
    s.amplitude.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
    s.phase.assign(buf.begin() + static_cast<std::ptrdiff_t>(n), buf.end());
    return s;
}

}  // namespace pamic
