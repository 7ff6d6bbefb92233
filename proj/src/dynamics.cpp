#include "mushroom/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mushroom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxEnvelopeSteps = 400;
constexpr int kMaxZeroSteps = 4;

// Positive root of c + b d + (m/2) d^2 with c >= 0 and m <= 0; inf if none.
double envelope_step(double c, double b, double m)
{
    if (m >= 0.0)
        return b < 0.0 ? -c / b : kInf;
    const double a = 0.5 * m;
    const double disc = std::sqrt(b * b - 4.0 * a * c);
    if (b <= 0.0)
        return disc - b > 0.0 ? 2.0 * c / (disc - b) : 0.0;
    return (b + disc) / (-m);
}

}  // namespace

double ParticleState::speed() const
{
    return std::hypot(vx, vy);
}

const char* to_string(Wall wall)
{
    switch (wall) {
    case Wall::arc: return "arc";
    case Wall::cap_bottom_left: return "cap_bottom_left";
    case Wall::cap_bottom_right: return "cap_bottom_right";
    case Wall::stem_left: return "stem_left";
    case Wall::stem_right: return "stem_right";
    case Wall::stem_bottom: return "stem_bottom";
    case Wall::hole: return "hole";
    }
    return "unknown";
}

const char* to_string(Outcome outcome)
{
    switch (outcome) {
    case Outcome::running: return "running";
    case Outcome::completed: return "completed";
    case Outcome::corner_hit: return "corner_hit";
    case Outcome::penetration: return "penetration";
    case Outcome::solver_failure: return "solver_failure";
    }
    return "unknown";
}

Reflection reflect(double v_par, double v_perp, double u, double graze_tol)
{
    if (std::abs(v_perp - u) <= graze_tol)
        return {v_par, v_perp, true};
    return {v_par, 2.0 * u - v_perp, false};
}

double adiabatic_angle(const ParticleState& state, double r)
{
    const double v = state.speed();
    if (!(v > 0.0) || !(r > 0.0))
        throw std::invalid_argument("adiabatic_angle: speed and radius must be positive");
    return -state.angular_momentum() / (v * r);
}

CaptureEvent classify_sojourn(const Sojourn& sojourn, const Protocol& protocol, double tol_nu)
{
    return classify_sojourn(sojourn, protocol, protocol.capture_intervals(), tol_nu);
}

CaptureEvent classify_sojourn(const Sojourn& s, const Protocol& protocol,
                              const std::vector<TimeInterval>& windows, double tol_nu)
{
    CaptureEvent ev;
    ev.t_enter = s.t_enter;
    ev.t_exit = s.t_exit;
    ev.sin_phi0 = s.sin_phi0;
    ev.open = s.open;

    const double a = s.t_enter;
    const double b = std::max(s.t_exit, s.t_enter);
    const double period = protocol.period();

    // nu is monotone between consecutive window ends, so the pieces below
    // bracket every local minimum.
    std::vector<double> cuts{a, b};
    const double k0 = std::floor(a / period) - 1.0;
    const double k1 = std::floor(b / period) + 1.0;
    for (double k = k0; k <= k1; k += 1.0) {
        for (const auto& w : windows) {
            for (double edge : {w.begin + k * period, w.end + k * period})
                if (edge > a && edge < b)
                    cuts.push_back(edge);
        }
    }
    std::sort(cuts.begin(), cuts.end());

    // A particle that is already inside the island when the sojourn starts
    // (possible only for a cap start) is not captured until nu has first
    // risen back to its invariant.
    const double target = s.sin_phi0;
    double prev_nu = protocol.nu_at(cuts.front());
    bool armed = prev_nu >= target - tol_nu;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double nu = protocol.nu_at(cuts[i]);
        if (!armed) {
            armed = nu >= target;
            prev_nu = nu;
            continue;
        }
        if (nu < target - tol_nu) {
            double lo = cuts[i - 1];
            double hi = cuts[i];
            if (prev_nu >= target) {
                for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (protocol.nu_at(mid) >= target)
                        lo = mid;
                    else
                        hi = mid;
                }
            }
            ev.captured = true;
            ev.t_in = prev_nu >= target ? 0.5 * (lo + hi) : lo;
            ev.t_out = b;
            return ev;
        }
        prev_nu = nu;
    }
    return ev;
}

Simulator::Simulator(const Protocol& protocol, ParticleState initial, SimulationOptions options)
    : protocol_(protocol),
      bounds_(protocol.motion_bounds()),
      options_(options),
      state_(initial),
      windows_(protocol.capture_intervals())
{
    for (double c : {initial.x, initial.y, initial.vx, initial.vy, initial.t})
        if (!std::isfinite(c))
            throw std::invalid_argument("Simulator: non-finite initial state");
    if (!(initial.speed() > 0.0))
        throw std::invalid_argument("Simulator: initial speed must be positive");
    now_ = protocol_.kinematics_at(state_.t);
    const Region where = contains(now_.shape, {state_.x, state_.y});
    if (where == Region::outside)
        throw std::invalid_argument("Simulator: initial position outside the billiard");
    in_cap_ = state_.y > 0.0 || (state_.y == 0.0 && (std::abs(state_.x) > now_.shape.w || state_.vy > 0.0));
    if (in_cap_)
        open_sojourn();
}

void Simulator::fail(Outcome outcome, std::string message)
{
    if (outcome_ == Outcome::running || outcome_ == Outcome::completed) {
        outcome_ = outcome;
        message_ = std::move(message);
    }
}

Simulator::GapValue Simulator::gap(Gap g, double tau, const Kinematics& k) const
{
    const double px = state_.x + state_.vx * tau;
    const double py = state_.y + state_.vy * tau;
    const double tn = k.shape.tan_theta;
    switch (g) {
    case Gap::arc:
        return {k.shape.r * k.shape.r - (px * px + py * py),
                2.0 * (k.shape.r * k.rates.dr - (px * state_.vx + py * state_.vy))};
    case Gap::stem_right:
        return {k.shape.w + py * tn - px, k.rates.dw + state_.vy * tn - state_.vx};
    case Gap::stem_left:
        return {k.shape.w + py * tn + px, k.rates.dw + state_.vy * tn + state_.vx};
    case Gap::stem_bottom:
        return {py + k.shape.h, state_.vy + k.rates.dh};
    case Gap::none:
        break;
    }
    return {kInf, 0.0};
}

double Simulator::curvature_floor(Gap g) const
{
    switch (g) {
    case Gap::arc: {
        const double v2 = state_.vx * state_.vx + state_.vy * state_.vy;
        return -2.0 * v2 - 2.0 * bounds_.r_max * bounds_.ddr_max;
    }
    case Gap::stem_left:
    case Gap::stem_right: return -bounds_.ddw_max;
    case Gap::stem_bottom: return -bounds_.ddh_max;
    case Gap::none: break;
    }
    return 0.0;
}

double Simulator::gap_tolerance(Gap g) const
{
    const double scale = std::max(bounds_.r_max, now_.shape.r);
    const double tol = options_.tol.residual * scale;
    return g == Gap::arc ? 2.0 * scale * tol : tol;
}

// First root of the gap in [0, horizon], approached from the left: each step
// jumps to the root of the lower Taylor envelope, which never passes the
// first root of the gap itself.
double Simulator::first_root(Gap g, double horizon)
{
    const double m = curvature_floor(g);
    const double tol = gap_tolerance(g);
    GapValue gv = gap(g, 0.0, now_);
    double tau = 0.0;
    bool check = true;

    if (g == skip_) {
        const double scale = std::max(bounds_.r_max, now_.shape.r);
        const double pen = options_.tol.penetration * scale * (g == Gap::arc ? 2.0 * scale : 1.0);
        if (gv.value < -pen) {
            fail(Outcome::penetration, std::string("particle outside wall ") + std::to_string(static_cast<int>(g)));
            return kInf;
        }
        gv.value = std::max(gv.value, 0.0);
        gv.slope = std::max(gv.slope, 0.0);
        check = false;
    }

    for (int it = 0; it < kMaxEnvelopeSteps; ++it) {
        if (check && gv.value <= tol)
            return tau;
        check = true;
        const double step = envelope_step(std::max(gv.value, 0.0), gv.slope, m);
        tau += step;
        if (!(tau <= horizon))
            return kInf;
        gv = gap(g, tau, protocol_.kinematics_at(state_.t + tau));
    }
    fail(Outcome::solver_failure, "root search did not converge");
    return kInf;
}

std::optional<Simulator::Prediction> Simulator::predict_cap(double horizon)
{
    const double t_line = state_.vy < 0.0 ? std::max(0.0, -state_.y / state_.vy) : kInf;
    const double h = std::min(horizon, t_line);
    const double t_arc = first_root(Gap::arc, h);
    if (outcome_ != Outcome::running)
        return std::nullopt;
    if (t_arc <= h && t_arc <= t_line)
        return Prediction{t_arc, Wall::arc};
    if (!(t_line <= horizon))
        return std::nullopt;

    const double x = state_.x + state_.vx * t_line;
    const double w = protocol_.kinematics_at(state_.t + t_line).shape.w;
    const double r = now_.shape.r;
    if (std::abs(std::abs(x) - w) < options_.tol.corner * r) {
        fail(Outcome::corner_hit, "hole corner hit from the cap");
        return std::nullopt;
    }
    if (std::abs(x) < w)
        return Prediction{t_line, Wall::hole};
    return Prediction{t_line, x < 0.0 ? Wall::cap_bottom_left : Wall::cap_bottom_right};
}

std::optional<Simulator::Prediction> Simulator::predict_stem(double horizon)
{
    const double t_top = state_.vy > 0.0 ? std::max(0.0, -state_.y / state_.vy) : kInf;
    double best = std::min(horizon, t_top);
    Wall wall = Wall::hole;
    bool hit = false;

    // Cheap lower bounds first so that only walls that can still win get
    // refined.
    struct Cand
    {
        Gap g;
        Wall w;
        double lb;
    };
    Cand cands[3] = {{Gap::stem_left, Wall::stem_left, 0.0},
                     {Gap::stem_right, Wall::stem_right, 0.0},
                     {Gap::stem_bottom, Wall::stem_bottom, 0.0}};
    for (auto& c : cands) {
        GapValue gv = gap(c.g, 0.0, now_);
        if (c.g == skip_)
            gv.slope = std::max(gv.slope, 0.0);
        c.lb = envelope_step(std::max(gv.value, 0.0), gv.slope, curvature_floor(c.g));
    }
    std::sort(std::begin(cands), std::end(cands), [](const Cand& a, const Cand& b) { return a.lb < b.lb; });
    for (const auto& c : cands) {
        if (!(c.lb <= best))
            break;
        const double t = first_root(c.g, best);
        if (outcome_ != Outcome::running)
            return std::nullopt;
        if (t <= best) {
            best = t;
            wall = c.w;
            hit = true;
        }
    }

    const double r = now_.shape.r;
    if (hit) {
        if (wall == Wall::stem_bottom) {
            const Kinematics k = protocol_.kinematics_at(state_.t + best);
            const double x = state_.x + state_.vx * best;
            if (std::abs(std::abs(x) - k.shape.bottom_half_width()) < options_.tol.corner * r) {
                fail(Outcome::corner_hit, "stem bottom corner hit");
                return std::nullopt;
            }
        }
        return Prediction{best, wall};
    }
    if (!(t_top <= horizon))
        return std::nullopt;
    const double x = state_.x + state_.vx * t_top;
    const double w = protocol_.kinematics_at(state_.t + t_top).shape.w;
    if (std::abs(std::abs(x) - w) < options_.tol.corner * r) {
        fail(Outcome::corner_hit, "hole corner hit from the stem");
        return std::nullopt;
    }
    return Prediction{t_top, Wall::hole};
}

std::optional<Simulator::Prediction> Simulator::next_collision(double horizon)
{
    return in_cap_ ? predict_cap(horizon) : predict_stem(horizon);
}

void Simulator::open_sojourn()
{
    in_sojourn_ = true;
    sojourn_ = Sojourn{};
    sojourn_.t_enter = state_.t;
    sojourn_.sin_phi0 = std::abs(adiabatic_angle(state_, now_.shape.r));
}

void Simulator::close_sojourn(bool open)
{
    if (!in_sojourn_)
        return;
    in_sojourn_ = false;
    sojourn_.t_exit = state_.t;
    sojourn_.open = open;
    ++n_sojourns_;
    CaptureEvent ev = classify_sojourn(sojourn_, protocol_, windows_, options_.tol.nu);
    if (ev.captured || options_.record_all_sojourns)
        captures_.push_back(ev);
}

void Simulator::reflect_from(Wall wall, Vec2 n, double u)
{
    // Divide by |n|^2 rather than trusting n to be exactly unit length: the
    // static part of the update is then an exact reflection and the speed
    // does not drift systematically.
    const double nn = n.x * n.x + n.y * n.y;
    const double len = std::sqrt(nn);
    const double vn = (state_.vx * n.x + state_.vy * n.y) / len;
    const double speed_before = state_.speed();
    const double v_par = (state_.vx * -n.y + state_.vy * n.x) / len;
    const double graze = options_.tol.graze * speed_before;
    if (vn - u < -graze) {
        fail(Outcome::penetration, std::string("wall overtook the particle at ") + to_string(wall));
        return;
    }
    const Reflection out = reflect(v_par, vn, u, graze);
    ++n_collisions_;
    if (out.tangency) {
        ++n_tangencies_;
    } else {
        const double c = 2.0 * u / len - 2.0 * (state_.vx * n.x + state_.vy * n.y) / nn;
        state_.vx += c * n.x;
        state_.vy += c * n.y;
    }
    if (options_.record_collisions) {
        CollisionEvent ev;
        ev.time = state_.t;
        ev.wall = wall;
        ev.point = {state_.x, state_.y};
        ev.impact_angle = std::acos(std::clamp(vn / speed_before, -1.0, 1.0));
        ev.speed_before = speed_before;
        ev.speed_after = state_.speed();
        collision_log_.push_back(ev);
    }
}

void Simulator::apply_event(const Prediction& p)
{
    zero_steps_ = p.dt > 0.0 ? 0 : zero_steps_ + 1;
    if (zero_steps_ > kMaxZeroSteps) {
        fail(Outcome::solver_failure, "no progress between wall events");
        return;
    }
    state_.x += state_.vx * p.dt;
    state_.y += state_.vy * p.dt;
    state_.t += p.dt;
    now_ = protocol_.kinematics_at(state_.t);
    const MushroomShape& s = now_.shape;
    const double sec = std::sqrt(1.0 + s.tan_theta * s.tan_theta);

    switch (p.wall) {
    case Wall::hole: {
        state_.y = 0.0;
        ++n_crossings_;
        const bool upward = !in_cap_;
        if (options_.record_crossings)
            crossing_log_.push_back({state_.t, state_.x, upward});
        if (upward) {
            in_cap_ = true;
            open_sojourn();
        } else {
            close_sojourn(false);
            in_cap_ = false;
        }
        skip_ = Gap::none;
        return;
    }
    case Wall::cap_bottom_left:
    case Wall::cap_bottom_right:
        state_.y = 0.0;
        reflect_from(p.wall, {0.0, -1.0}, 0.0);
        skip_ = Gap::none;
        return;
    case Wall::arc: {
        reflect_from(p.wall, {state_.x, state_.y}, now_.rates.dr);
        skip_ = Gap::arc;
        return;
    }
    case Wall::stem_right:
        reflect_from(p.wall, {1.0, -s.tan_theta}, now_.rates.dw / sec);
        skip_ = Gap::stem_right;
        return;
    case Wall::stem_left:
        reflect_from(p.wall, {-1.0, -s.tan_theta}, now_.rates.dw / sec);
        skip_ = Gap::stem_left;
        return;
    case Wall::stem_bottom:
        reflect_from(p.wall, {0.0, -1.0}, now_.rates.dh);
        skip_ = Gap::stem_bottom;
        return;
    }
}

Outcome Simulator::advance_to(double t_end)
{
    if (outcome_ != Outcome::running && outcome_ != Outcome::completed)
        return outcome_;
    outcome_ = Outcome::running;
    while (state_.t < t_end) {
        if (options_.max_collisions != 0 && n_collisions_ >= options_.max_collisions)
            break;
        const double horizon = t_end - state_.t;
        const auto p = next_collision(horizon);
        if (outcome_ != Outcome::running)
            return outcome_;
        if (!p) {
            state_.x += state_.vx * horizon;
            state_.y += state_.vy * horizon;
            state_.t = t_end;
            now_ = protocol_.kinematics_at(state_.t);
            if (skip_ != Gap::none && horizon > 0.0)
                skip_ = Gap::none;
            break;
        }
        apply_event(*p);
        if (outcome_ != Outcome::running)
            return outcome_;
    }
    outcome_ = Outcome::completed;
    return outcome_;
}

void Simulator::finish()
{
    if (in_sojourn_)
        close_sojourn(true);
}

Trajectory simulate(const ParticleState& initial, const Protocol& protocol, double t_end,
                    SimulationOptions options)
{
    Simulator sim(protocol, initial, options);
    sim.advance_to(t_end);
    sim.finish();
    Trajectory out;
    out.final_state = sim.state();
    out.outcome = sim.outcome();
    out.message = sim.message();
    out.collisions = sim.collisions();
    out.collision_log = sim.collision_log();
    out.crossings = sim.crossing_log();
    out.captures = sim.captures();
    return out;
}

}  // namespace mushroom
