#include "mushroom/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mushroom {

namespace {

double reduce(double t, double period, double* cycles = nullptr)
{
    double k = std::floor(t / period);
    double tau = t - k * period;
    if (tau < 0.0) {
        tau += period;
        k -= 1.0;
    }
    if (tau >= period) {
        tau -= period;
        k += 1.0;
    }
    if (cycles)
        *cycles = k;
    return tau;
}

double clamp_nu(double nu)
{
    return std::clamp(nu, 0.0, 1.0);
}

}  // namespace

double PredictedDistribution::total_mass() const
{
    double sum = atom_mass;
    for (double m : masses)
        sum += m;
    return sum;
}

double PredictedDistribution::mean() const
{
    double sum = atom_mass * atom_value;
    for (std::size_t i = 0; i < masses.size(); ++i)
        sum += masses[i] * values[i];
    return sum / total_mass();
}

TheoryEngine::TheoryEngine(std::shared_ptr<const Protocol> protocol, TheoryOptions options)
    : protocol_(std::move(protocol)), options_(options)
{
    if (!protocol_)
        throw std::invalid_argument("TheoryEngine: null protocol");
    if (options_.panels < 2)
        throw std::invalid_argument("TheoryEngine: at least two panels required");
    period_ = protocol_->period();
    windows_ = protocol_->capture_intervals();

    std::vector<double> cuts = {0.0, period_};
    for (double b : protocol_->breakpoints())
        cuts.push_back(b);
    for (const auto& w : windows_) {
        cuts.push_back(w.begin);
        cuts.push_back(w.end);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [&](double a, double b) { return std::abs(a - b) < 1e-14 * period_; }),
               cuts.end());

    const double reference = windows_.empty() ? period_ : windows_.front().end - windows_.front().begin;
    const double density = static_cast<double>(options_.panels) / reference;

    nodes_.push_back({0.0, flux_rate(0.0), 0.0});
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s];
        const double b = cuts[s + 1];
        auto cells = static_cast<std::size_t>(std::ceil(density * (b - a)));
        cells = std::max<std::size_t>(2, cells + (cells % 2));
        const double h = (b - a) / static_cast<double>(cells);
        for (std::size_t i = 1; i <= cells; ++i) {
            const Node& prev = nodes_.back();
            double t = i == cells ? b : a + h * static_cast<double>(i);
            double f = flux_rate(t);
            double mid = flux_rate(0.5 * (prev.t + t));
            nodes_.push_back({t, f, prev.cumulative + (t - prev.t) / 6.0 * (prev.f + 4.0 * mid + f)});
        }
    }

    nu_max_ = 0.0;
    for (const auto& n : nodes_)
        nu_max_ = std::max(nu_max_, protocol_->nu_at(n.t));
}

double TheoryEngine::flux_rate(double t) const
{
    auto k = protocol_->kinematics_at(t);
    const auto& s = k.shape;
    auto v = volumes(s);
    double dnu = (s.r * k.rates.dw - s.w * k.rates.dr) / (s.r * s.r);
    return v.v_cap / v.v_cha * delta_derivative(clamp_nu(s.nu())) * dnu;
}

double TheoryEngine::flux_integral(double t) const
{
    double cycles = 0.0;
    double tau = reduce(t, period_, &cycles);
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), tau,
                               [](double x, const Node& n) { return x < n.t; });
    const Node& n = *std::prev(it);
    double partial = 0.0;
    if (tau > n.t) {
        double f_tau = flux_rate(tau);
        double f_mid = flux_rate(0.5 * (n.t + tau));
        partial = (tau - n.t) / 6.0 * (n.f + 4.0 * f_mid + f_tau);
    }
    return cycles * nodes_.back().cumulative + n.cumulative + partial;
}

double TheoryEngine::log_relative_chaotic(double t) const
{
    auto v = volumes(protocol_->shape_at(t));
    return std::log(v.v_cha / v.v_cap);
}

double TheoryEngine::d_log_relative_chaotic(double t) const
{
    auto k = protocol_->kinematics_at(t);
    const auto& s = k.shape;
    const auto& d = k.rates;
    constexpr double pi = 3.14159265358979323846;
    auto v = volumes(s);
    double nu = clamp_nu(s.nu());
    double dnu = (s.r * d.dw - s.w * d.dr) / (s.r * s.r);
    double dcap = 2.0 * pi * pi * s.r * d.dr;
    double dstem = 2.0 * pi * (2.0 * d.dw * s.h + 2.0 * s.w * d.dh - 2.0 * s.h * d.dh * s.tan_theta);
    double dell = delta_derivative(nu) * dnu * v.v_cap + delta(nu) * dcap;
    double dcha = dcap + dstem - dell;
    return dcha / v.v_cha - dcap / v.v_cap;
}

const TimeInterval& TheoryEngine::window_of(double t) const
{
    double tau = reduce(t, period_);
    for (const auto& w : windows_)
        if (tau >= w.begin && tau <= w.end)
            return w;
    static const TimeInterval none{-1.0, -1.0};
    return none;
}

double TheoryEngine::p_at_window(const TimeInterval& w, double t) const
{
    double tau = t;
    if (tau < w.begin || tau > w.end)
        tau = reduce(t, period_);
    return std::exp(-(flux_integral(tau) - flux_integral(w.begin)));
}

void TheoryEngine::require_single_window(const char* what) const
{
    if (windows_.size() > 1)
        throw TopologyError(std::string(what) + " assumes a single capture interval per cycle; protocol has " +
                            std::to_string(windows_.size()));
}

double TheoryEngine::capture_probability(double t) const
{
    const auto& w = window_of(t);
    if (w.begin >= 0.0)
        return p_at_window(w, w.begin + (reduce(t, period_) - w.begin));
    if (windows_.empty())
        return 1.0;
    require_single_window("capture_probability outside the capture interval");

    // Release phase: particles captured while nu was above the running
    // maximum of nu since the window closed are back in the chaotic zone.
    const auto& win = windows_.front();
    double tau = reduce(t, period_);
    if (tau < win.begin)
        tau += period_;
    double level = protocol_->nu_at(tau);
    for (const auto& n : nodes_) {
        double tn = n.t < win.end ? n.t + period_ : n.t;
        if (tn >= win.end && tn <= tau)
            level = std::max(level, protocol_->nu_at(n.t));
    }
    if (level >= protocol_->nu_at(win.begin))
        return 1.0;
    double lo = win.begin;
    double hi = win.end;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * period_; ++it) {
        double mid = 0.5 * (lo + hi);
        if (protocol_->nu_at(mid) > level)
            lo = mid;
        else
            hi = mid;
    }
    return p_at_window(win, 0.5 * (lo + hi));
}

double TheoryEngine::compression_factor(double t) const
{
    double tr = protocol_->release_time(t);
    return std::exp(log_relative_chaotic(t) - log_relative_chaotic(tr));
}

double TheoryEngine::growth_rate() const
{
    double m1 = 0.0;
    for (const auto& w : windows_) {
        if (protocol_->nu_at(w.begin) < nu_max_ - 1e-12)
            throw TopologyError("growth rate needs every capture interval to start with the island empty");
        auto integrand = [&](double t) {
            double g = compression_factor(t);
            return (g - 1.0 - std::log(g)) * p_at_window(w, t) * flux_rate(t);
        };
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            double a = nodes_[i].t;
            double b = nodes_[i + 1].t;
            if (a < w.begin || b > w.end)
                continue;
            m1 += (b - a) / 6.0 * (integrand(a) + 4.0 * integrand(0.5 * (a + b)) + integrand(b));
        }
    }
    return m1;
}

double TheoryEngine::energy_noncaptured() const
{
    return -nodes_.back().cumulative;
}

double TheoryEngine::energy_captured(double t_in) const
{
    require_single_window("energy_captured");
    double t_out = protocol_->release_time(t_in);
    double total = nodes_.back().cumulative;
    return -std::log(compression_factor(t_in)) - (total + flux_integral(t_in) - flux_integral(t_out));
}

PredictedDistribution TheoryEngine::predicted_distribution(std::size_t bins) const
{
    require_single_window("predicted_distribution");
    PredictedDistribution d;
    d.atom_value = energy_noncaptured();
    d.atom_mass = 1.0;
    if (!windows_.empty()) {
        const auto& w = windows_.front();
        double p_prev = 1.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            double a = nodes_[i].t;
            double b = nodes_[i + 1].t;
            if (a < w.begin || b > w.end)
                continue;
            double p_next = p_at_window(w, b);
            d.masses.push_back(p_prev - p_next);
            d.values.push_back(energy_captured(0.5 * (a + b)));
            p_prev = p_next;
        }
        d.atom_mass = p_prev;
    }

    std::vector<double> values = d.values;
    std::vector<double> weights = d.masses;
    values.push_back(d.atom_value);
    weights.push_back(d.atom_mass);
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn;
    double hi = *mx;
    if (hi - lo < 1e-9) {
        lo -= 0.05;
        hi += 0.05;
    } else {
        double pad = 1e-9 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    d.histogram = make_weighted_histogram(values, weights, bins, lo, hi);
    return d;
}

double TheoryEngine::loop_area(std::size_t samples) const
{
    if (samples < 3)
        throw std::invalid_argument("loop_area: need at least three samples");
    std::vector<Vec2> pts(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double t = period_ * static_cast<double>(i) / static_cast<double>(samples);
        auto v = volumes(protocol_->shape_at(t));
        pts[i] = {v.v_ell / v.v_cap, v.v_cap / (v.v_cap + v.v_stem)};
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % samples];
        twice += p.x * q.y - q.x * p.y;
    }
    return 0.5 * twice;
}

std::pair<double, double> TheoryEngine::growth_rate_by_parts() const
{
    require_single_window("growth_rate_by_parts");
    std::vector<double> p(nodes_.size(), 1.0);
    if (!windows_.empty()) {
        const auto& w = windows_.front();
        const double nu_begin = protocol_->nu_at(w.begin);
        double running = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            double t = nodes_[i].t;
            if (t < w.begin)
                continue;
            if (t <= w.end) {
                p[i] = p_at_window(w, t);
                continue;
            }
            running = std::max(running, protocol_->nu_at(t));
            if (running >= nu_begin)
                continue;
            double lo = w.begin;
            double hi = w.end;
            for (int it = 0; it < 100 && hi - lo > 1e-15 * period_; ++it) {
                double mid = 0.5 * (lo + hi);
                if (protocol_->nu_at(mid) > running)
                    lo = mid;
                else
                    hi = mid;
            }
            p[i] = p_at_window(w, 0.5 * (lo + hi));
        }
    }

    // Composite Simpson over pairs of cells; every segment has an even
    // number of cells, so pairs never straddle a cut.
    double i1 = 0.0;
    double i2 = 0.0;
    for (std::size_t i = 0; i + 2 < nodes_.size(); i += 2) {
        double h = 0.5 * (nodes_[i + 2].t - nodes_[i].t);
        auto a1 = [&](std::size_t k) { return p[k] * d_log_relative_chaotic(nodes_[k].t); };
        auto a2 = [&](std::size_t k) { return p[k] * nodes_[k].f; };
        i1 -= h / 3.0 * (a1(i) + 4.0 * a1(i + 1) + a1(i + 2));
        i2 -= h / 3.0 * (a2(i) + 4.0 * a2(i + 1) + a2(i + 2));
    }
    return {i1, i2};
}

TheoryPrediction TheoryEngine::predict() const
{
    require_single_window("predict");
    TheoryPrediction out;
    out.m1 = growth_rate();
    out.ln_e_nc = energy_noncaptured();
    out.loop_area = loop_area(options_.loop_samples);
    out.distribution = predicted_distribution(options_.bins);
    if (windows_.empty())
        return out;

    const auto& w = windows_.front();
    out.capture = w;
    out.p_nc = p_at_window(w, w.end);
    const std::size_t n = std::max<std::size_t>(2, options_.curve_samples);
    for (std::size_t i = 0; i < n; ++i) {
        double t = w.begin + (w.end - w.begin) * static_cast<double>(i) / static_cast<double>(n - 1);
        double p = p_at_window(w, t);
        out.p_cha.t.push_back(t);
        out.p_cha.value.push_back(p);
        out.p_ell.t.push_back(t);
        out.p_ell.value.push_back(1.0 - p);
        out.g.t.push_back(t);
        out.g.value.push_back(compression_factor(t));
        out.ln_e1.t.push_back(t);
        out.ln_e1.value.push_back(energy_captured(t));
    }
    return out;
}

}  // namespace mushroom
