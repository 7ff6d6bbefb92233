#pragma once

#include "mushroom/protocol.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mushroom {

struct ParticleState
{
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double t = 0.0;

    double speed() const;
    double energy() const { return 0.5 * (vx * vx + vy * vy); }
    double angular_momentum() const { return x * vy - y * vx; }
};

enum class Wall : std::uint8_t {
    arc,
    cap_bottom_left,
    cap_bottom_right,
    stem_left,
    stem_right,
    stem_bottom,
    hole,
};

const char* to_string(Wall wall);

struct CollisionEvent
{
    double time = 0.0;
    Wall wall = Wall::arc;
    Vec2 point{};
    double impact_angle = 0.0;  ///< angle between incoming velocity and outward normal
    double speed_before = 0.0;
    double speed_after = 0.0;
};

struct HoleCrossing
{
    double time = 0.0;
    double x = 0.0;
    bool upward = false;  ///< stem -> cap
};

/// One stay in the cap, delimited by hole crossings (or the start/end of the
/// simulation).
struct Sojourn
{
    double t_enter = 0.0;
    double t_exit = 0.0;
    double sin_phi0 = 0.0;  ///< |sin phi_hat| on entry
    bool open = false;      ///< still in the cap when the simulation stopped
};

struct CaptureEvent
{
    double t_enter = 0.0;
    double t_exit = 0.0;
    double sin_phi0 = 0.0;
    bool captured = false;
    double t_in = 0.0;   ///< valid when captured
    double t_out = 0.0;  ///< valid when captured
    bool open = false;
};

struct Tolerances
{
    double nu = 1e-9;          ///< absolute, capture classification
    double graze = 1e-9;       ///< relative to speed
    double corner = 1e-9;      ///< relative to r
    double penetration = 1e-8; ///< relative to r
    double residual = 1e-12;   ///< relative to r
};

enum class Outcome : std::uint8_t { running, completed, corner_hit, penetration, solver_failure };

const char* to_string(Outcome outcome);

/// v_par' = v_par, v_perp' = 2u - v_perp. v_perp is the velocity component
/// along the wall's outward normal, u the wall's normal velocity.
struct Reflection
{
    double v_par = 0.0;
    double v_perp = 0.0;
    bool tangency = false;  ///< no reflection: |v_perp - u| below the grazing tolerance
};

Reflection reflect(double v_par, double v_perp, double u, double graze_tol = 0.0);

/// sin(phi_hat) = -(x vy - y vx) / (sqrt(2E) r).
double adiabatic_angle(const ParticleState& state, double r);

/// Capture iff nu drops below sin_phi0 - tol during the sojourn after having
/// been at least sin_phi0; then t_in is the first such crossing and t_out the
/// sojourn exit. A sojourn that starts with nu already below sin_phi0 (an
/// island particle placed in the cap) must first see nu rise back.
CaptureEvent classify_sojourn(const Sojourn& sojourn, const Protocol& protocol, double tol_nu = 1e-9);

/// Same, with the protocol's capture intervals precomputed.
CaptureEvent classify_sojourn(const Sojourn& sojourn, const Protocol& protocol,
                              const std::vector<TimeInterval>& windows, double tol_nu);

struct SimulationOptions
{
    Tolerances tol{};
    bool record_collisions = false;
    bool record_crossings = false;
    /// Keep non-capture sojourns too; captures are always kept.
    bool record_all_sojourns = false;
    /// Stop after this many wall collisions (0 = unlimited).
    std::uint64_t max_collisions = 0;
};

/// Event-driven integrator for one particle. The particle flies straight
/// between walls; wall-hit times are roots of gap functions bracketed with
/// Taylor envelopes built from the protocol's motion bounds.
class Simulator
{
public:
    Simulator(const Protocol& protocol, ParticleState initial, SimulationOptions options = {});

    /// Integrates up to t_end (or until a failure). Returns the outcome.
    Outcome advance_to(double t_end);

    /// Closes a sojourn still in progress (classifying it as open).
    void finish();

    const ParticleState& state() const { return state_; }
    Region region() const { return in_cap_ ? Region::cap : Region::stem; }
    Outcome outcome() const { return outcome_; }
    const std::string& message() const { return message_; }

    std::uint64_t collisions() const { return n_collisions_; }
    std::uint64_t crossings() const { return n_crossings_; }
    std::uint64_t tangencies() const { return n_tangencies_; }
    std::uint64_t sojourns() const { return n_sojourns_; }

    const std::vector<CollisionEvent>& collision_log() const { return collision_log_; }
    const std::vector<HoleCrossing>& crossing_log() const { return crossing_log_; }
    const std::vector<CaptureEvent>& captures() const { return captures_; }

    /// Next wall event from the current state, without applying it. Exposed
    /// for tests. Returns nullopt if nothing is hit before horizon.
    struct Prediction
    {
        double dt = 0.0;
        Wall wall = Wall::arc;
    };
    std::optional<Prediction> next_collision(double horizon);

private:
    enum class Gap : std::uint8_t { arc, stem_left, stem_right, stem_bottom, none };
    struct GapValue
    {
        double value;
        double slope;
    };

    GapValue gap(Gap g, double tau, const Kinematics& k) const;
    double curvature_floor(Gap g) const;
    double gap_tolerance(Gap g) const;
    double first_root(Gap g, double horizon);
    std::optional<Prediction> predict_cap(double horizon);
    std::optional<Prediction> predict_stem(double horizon);
    void fail(Outcome outcome, std::string message);
    void apply_event(const Prediction& p);
    void reflect_from(Wall wall, Vec2 normal, double u);
    void open_sojourn();
    void close_sojourn(bool open);

    const Protocol& protocol_;
    MotionBounds bounds_;
    SimulationOptions options_;
    ParticleState state_;
    Kinematics now_{};
    bool in_cap_ = true;
    Outcome outcome_ = Outcome::running;
    std::string message_;
    Gap skip_ = Gap::none;  // wall just hit; its root at tau = 0 is ignored
    int zero_steps_ = 0;
    std::vector<TimeInterval> windows_;

    bool in_sojourn_ = false;
    Sojourn sojourn_{};

    std::uint64_t n_collisions_ = 0;
    std::uint64_t n_crossings_ = 0;
    std::uint64_t n_tangencies_ = 0;
    std::uint64_t n_sojourns_ = 0;
    std::vector<CollisionEvent> collision_log_;
    std::vector<HoleCrossing> crossing_log_;
    std::vector<CaptureEvent> captures_;
};

struct Trajectory
{
    ParticleState final_state;
    Outcome outcome = Outcome::completed;
    std::string message;
    std::uint64_t collisions = 0;
    std::vector<CollisionEvent> collision_log;
    std::vector<HoleCrossing> crossings;
    std::vector<CaptureEvent> captures;
};

/// Runs one trajectory to t_end and returns its events.
Trajectory simulate(const ParticleState& initial, const Protocol& protocol, double t_end,
                    SimulationOptions options = {});

}  // namespace mushroom
