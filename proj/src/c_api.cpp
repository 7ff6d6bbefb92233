#include "mushroom/mushroom.h"

#include "mushroom/dynamics.hpp"
#include "mushroom/ensemble.hpp"
#include "mushroom/geometry.hpp"
#include "mushroom/protocol.hpp"
#include "mushroom/theory.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

using namespace mushroom;

struct mushroom_protocol
{
    std::shared_ptr<const Protocol> impl;
};

struct mushroom_theory
{
    std::unique_ptr<TheoryEngine> engine;
    std::optional<TheoryPrediction> prediction;
};

struct mushroom_ensemble
{
    EnsembleStats stats;
    std::vector<double> capture_times;
};

namespace {

thread_local std::string last_error;

mushroom_status set_error(mushroom_status code, std::string message)
{
    last_error = std::move(message);
    return code;
}

// Maps exceptions from the core onto status codes.
template <class F>
mushroom_status guarded(F&& f)
{
    try {
        last_error.clear();
        return f();
    } catch (const TopologyError& e) {
        return set_error(MUSHROOM_ERR_TOPOLOGY, e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(MUSHROOM_ERR_CONFIG, e.what());
    } catch (const std::domain_error& e) {
        return set_error(MUSHROOM_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return set_error(MUSHROOM_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(MUSHROOM_ERR_INTERNAL, "unknown error");
    }
}

mushroom_status null_arg(const char* what)
{
    return set_error(MUSHROOM_ERR_CONFIG, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out)
        std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Copies src into dst following the NULL-query convention.
mushroom_status copy_out(const std::vector<double>& src, double* dst, size_t* count)
{
    if (!count)
        return null_arg("count");
    if (!dst) {
        *count = src.size();
        return MUSHROOM_OK;
    }
    if (*count < src.size()) {
        const std::size_t need = src.size();
        *count = need;
        return set_error(MUSHROOM_ERR_BUFFER, "buffer holds fewer than " + std::to_string(need) + " values");
    }
    std::copy(src.begin(), src.end(), dst);
    *count = src.size();
    return MUSHROOM_OK;
}

MushroomShape to_shape(const mushroom_shape& s)
{
    return MushroomShape{s.r, s.w, s.h, s.tan_theta};
}

mushroom_state to_c(const ParticleState& s)
{
    return {s.x, s.y, s.vx, s.vy, s.t};
}

EnsembleConfig to_config(const mushroom_ensemble_config& c)
{
    EnsembleConfig out;
    out.particles = c.particles;
    out.e0 = c.e0;
    out.cycles = c.cycles;
    out.seed = c.seed;
    out.bins = c.bins;
    out.threads = c.threads;
    return out;
}

const TheoryPrediction& prediction_of(mushroom_theory* t)
{
    if (!t->prediction)
        t->prediction = t->engine->predict();
    return *t->prediction;
}

int outcome_code(Outcome o)
{
    switch (o) {
    case Outcome::corner_hit: return 1;
    case Outcome::penetration: return 2;
    case Outcome::solver_failure: return 3;
    default: return 0;
    }
}

}  // namespace

extern "C" {

const char* mushroom_version(void)
{
    return "1.0.0";
}

const char* mushroom_last_error(void)
{
    return last_error.c_str();
}

void mushroom_string_free(char* s)
{
    std::free(s);
}

mushroom_status mushroom_compute_volumes(const mushroom_shape* shape, mushroom_volumes* out)
{
    if (!shape || !out)
        return null_arg("shape and out");
    return guarded([&] {
        const MushroomShape s = to_shape(*shape);
        s.validate();
        const PhaseVolumes v = volumes(s);
        *out = {v.v_cap, v.v_stem, v.v_ell, v.v_cha, delta(s.nu()), area(s)};
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_protocol_from_json(const char* json, double default_e0, mushroom_protocol** out)
{
    if (!json || !out)
        return null_arg("json and out");
    *out = nullptr;
    return guarded([&] {
        auto p = protocol_from_json(json, default_e0);
        *out = new mushroom_protocol{std::move(p)};
        return MUSHROOM_OK;
    });
}

void mushroom_protocol_free(mushroom_protocol* p)
{
    delete p;
}

mushroom_status mushroom_protocol_to_json(const mushroom_protocol* p, char** json)
{
    if (!p || !json)
        return null_arg("protocol and json");
    return guarded([&] {
        *json = dup_string(p->impl->to_json());
        return *json ? MUSHROOM_OK : set_error(MUSHROOM_ERR_INTERNAL, "out of memory");
    });
}

mushroom_status mushroom_protocol_period(const mushroom_protocol* p, double* period)
{
    if (!p || !period)
        return null_arg("protocol and period");
    *period = p->impl->period();
    return MUSHROOM_OK;
}

mushroom_status mushroom_protocol_shape_at(const mushroom_protocol* p, double t, mushroom_shape* shape,
                                           mushroom_shape* rate)
{
    if (!p)
        return null_arg("protocol");
    return guarded([&] {
        const Kinematics k = p->impl->kinematics_at(t);
        if (shape)
            *shape = {k.shape.r, k.shape.w, k.shape.h, k.shape.tan_theta};
        if (rate)
            *rate = {k.rates.dr, k.rates.dw, k.rates.dh, 0.0};
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_protocol_capture_intervals(const mushroom_protocol* p, double* begin, double* end,
                                                    size_t* count)
{
    if (!p || !count)
        return null_arg("protocol and count");
    return guarded([&] {
        const auto windows = p->impl->capture_intervals();
        std::vector<double> b;
        std::vector<double> e;
        for (const auto& w : windows) {
            b.push_back(w.begin);
            e.push_back(w.end);
        }
        if (!begin || !end) {
            *count = windows.size();
            return MUSHROOM_OK;
        }
        size_t n = *count;
        const mushroom_status s = copy_out(b, begin, &n);
        if (s != MUSHROOM_OK) {
            *count = n;
            return s;
        }
        return copy_out(e, end, count);
    });
}

void mushroom_theory_options_default(mushroom_theory_options* options)
{
    if (!options)
        return;
    const TheoryOptions d;
    options->panels = d.panels;
    options->curve_samples = d.curve_samples;
    options->bins = d.bins;
}

mushroom_status mushroom_theory_create(const mushroom_protocol* p, const mushroom_theory_options* options,
                                       mushroom_theory** out)
{
    if (!p || !out)
        return null_arg("protocol and out");
    *out = nullptr;
    return guarded([&] {
        TheoryOptions o;
        if (options) {
            o.panels = options->panels;
            o.curve_samples = options->curve_samples;
            o.bins = options->bins;
        }
        auto t = std::make_unique<mushroom_theory>();
        t->engine = std::make_unique<TheoryEngine>(p->impl, o);
        *out = t.release();
        return MUSHROOM_OK;
    });
}

void mushroom_theory_free(mushroom_theory* t)
{
    delete t;
}

mushroom_status mushroom_theory_predict(mushroom_theory* t, mushroom_prediction* out)
{
    if (!t || !out)
        return null_arg("theory and out");
    return guarded([&] {
        const TheoryEngine& e = *t->engine;
        *out = mushroom_prediction{};
        out->m1 = std::numeric_limits<double>::quiet_NaN();
        out->p_nc = std::numeric_limits<double>::quiet_NaN();
        out->capture_intervals = e.capture_windows().size();
        out->ln_e_nc = e.energy_noncaptured();
        out->loop_area = e.loop_area(TheoryOptions{}.loop_samples);
        try {
            out->m1 = e.growth_rate();
        } catch (const TopologyError&) {
        }
        if (!e.single_window() && !e.capture_windows().empty())
            return set_error(MUSHROOM_ERR_TOPOLOGY,
                             "protocol has " + std::to_string(e.capture_windows().size()) +
                                 " capture intervals per cycle; capture statistics need exactly one");
        const TheoryPrediction& pr = prediction_of(t);
        out->m1 = pr.m1;
        out->p_nc = pr.p_nc;
        out->capture_begin = pr.capture.begin;
        out->capture_end = pr.capture.end;
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_theory_curve(mushroom_theory* t, mushroom_curve which, double* x, double* y, size_t* count)
{
    if (!t || !count)
        return null_arg("theory and count");
    return guarded([&] {
        const TheoryPrediction& pr = prediction_of(t);
        const Curve* c = nullptr;
        Curve density;
        switch (which) {
        case MUSHROOM_CURVE_P_CHA: c = &pr.p_cha; break;
        case MUSHROOM_CURVE_P_ELL: c = &pr.p_ell; break;
        case MUSHROOM_CURVE_G: c = &pr.g; break;
        case MUSHROOM_CURVE_LN_E1: c = &pr.ln_e1; break;
        case MUSHROOM_CURVE_PREDICTED_DENSITY: {
            const Histogram& h = pr.distribution.histogram;
            for (std::size_t i = 0; i < h.bins(); ++i) {
                density.t.push_back(h.center(i));
                density.value.push_back(h.density[i]);
            }
            c = &density;
            break;
        }
        default: return set_error(MUSHROOM_ERR_CONFIG, "unknown curve");
        }
        if (!x || !y) {
            *count = c->t.size();
            return MUSHROOM_OK;
        }
        size_t n = *count;
        const mushroom_status s = copy_out(c->t, x, &n);
        if (s != MUSHROOM_OK) {
            *count = n;
            return s;
        }
        return copy_out(c->value, y, count);
    });
}

mushroom_status mushroom_theory_atom(mushroom_theory* t, double* value, double* mass)
{
    if (!t || !value || !mass)
        return null_arg("theory, value and mass");
    return guarded([&] {
        const TheoryPrediction& pr = prediction_of(t);
        *value = pr.distribution.atom_value;
        *mass = pr.distribution.atom_mass;
        return MUSHROOM_OK;
    });
}

void mushroom_ensemble_config_default(mushroom_ensemble_config* config)
{
    if (!config)
        return;
    const EnsembleConfig d;
    *config = {d.particles, d.e0, d.cycles, d.seed, d.bins, d.threads};
}

mushroom_status mushroom_ensemble_run(const mushroom_protocol* p, const mushroom_ensemble_config* config,
                                      mushroom_progress_fn progress, void* user, mushroom_ensemble** out)
{
    if (!p || !config || !out)
        return null_arg("protocol, config and out");
    *out = nullptr;
    return guarded([&] {
        ProgressFn fn;
        if (progress)
            fn = [progress, user](std::size_t done, std::size_t total) { progress(done, total, user); };
        auto e = std::make_unique<mushroom_ensemble>();
        e->stats = run_ensemble(*p->impl, to_config(*config), fn);
        for (const auto& r : e->stats.particles)
            if (!r.aborted())
                e->capture_times.insert(e->capture_times.end(), r.capture_times.begin(), r.capture_times.end());
        const double frac = e->stats.aborted_fraction();
        *out = e.release();
        if (frac > 1e-3)
            return set_error(MUSHROOM_ERR_QUALITY,
                             "aborted-trajectory fraction " + std::to_string(frac) + " exceeds 1e-3");
        return MUSHROOM_OK;
    });
}

void mushroom_ensemble_free(mushroom_ensemble* e)
{
    delete e;
}

mushroom_status mushroom_ensemble_get_summary(const mushroom_ensemble* e, mushroom_ensemble_summary* out)
{
    if (!e || !out)
        return null_arg("ensemble and out");
    const EnsembleStats& s = e->stats;
    *out = {s.completed,  s.aborted,    s.captured,        s.m1_star,           s.sigma_n,
            s.p_nc_star,  s.p_nc_sigma, s.mean_collisions, s.aborted_fraction(), s.period};
    return MUSHROOM_OK;
}

mushroom_status mushroom_ensemble_histogram(const mushroom_ensemble* e, mushroom_histogram_kind kind, double* edges,
                                            double* density, size_t* count)
{
    if (!e || !count)
        return null_arg("ensemble and count");
    const Histogram* h = nullptr;
    if (kind == MUSHROOM_HIST_LOG_ENERGY)
        h = &e->stats.log_energy;
    else if (kind == MUSHROOM_HIST_CAPTURE_TIMES)
        h = &e->stats.capture_times;
    else
        return set_error(MUSHROOM_ERR_CONFIG, "unknown histogram kind");
    if (!edges || !density) {
        *count = h->bins();
        return MUSHROOM_OK;
    }
    if (*count < h->bins()) {
        *count = h->bins();
        return set_error(MUSHROOM_ERR_BUFFER, "histogram buffer too small");
    }
    std::copy(h->edges.begin(), h->edges.end(), edges);
    std::copy(h->density.begin(), h->density.end(), density);
    *count = h->bins();
    return MUSHROOM_OK;
}

mushroom_status mushroom_ensemble_normalized(const mushroom_ensemble* e, size_t n, size_t bins, double* edges,
                                             double* density, mushroom_moments* moments)
{
    if (!e)
        return null_arg("ensemble");
    if (n < 1 || n > e->stats.config.cycles)
        return set_error(MUSHROOM_ERR_CONFIG, "n must lie in [1, cycles]");
    return guarded([&] {
        if (moments) {
            const MomentSummary m = normalized_moments(e->stats.particles, n);
            *moments = {m.count, m.mean, m.variance, m.std_error};
        }
        if (edges && density) {
            const Histogram h = multi_cycle_normalized(e->stats.particles, n, bins);
            std::copy(h.edges.begin(), h.edges.end(), edges);
            std::copy(h.density.begin(), h.density.end(), density);
        }
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_ensemble_particle(const mushroom_ensemble* e, size_t index, mushroom_particle* out)
{
    if (!e || !out)
        return null_arg("ensemble and out");
    if (index >= e->stats.particles.size())
        return set_error(MUSHROOM_ERR_CONFIG, "particle index out of range");
    const ParticleResult& r = e->stats.particles[index];
    out->index = r.index;
    out->aborted = r.aborted() ? 1 : 0;
    out->captured = r.captured() ? 1 : 0;
    out->collisions = r.collisions;
    out->cycles_completed = r.log_ratio.size();
    out->log_ratio = r.log_ratio.empty() ? std::numeric_limits<double>::quiet_NaN() : r.log_ratio.back();
    out->t_in = r.t_in;
    out->t_out = r.t_out;
    return MUSHROOM_OK;
}

mushroom_status mushroom_ensemble_log_ratios(const mushroom_ensemble* e, size_t index, double* values, size_t* count)
{
    if (!e)
        return null_arg("ensemble");
    if (index >= e->stats.particles.size())
        return set_error(MUSHROOM_ERR_CONFIG, "particle index out of range");
    return copy_out(e->stats.particles[index].log_ratio, values, count);
}

mushroom_status mushroom_ensemble_capture_times(const mushroom_ensemble* e, double* times, size_t* count)
{
    if (!e)
        return null_arg("ensemble");
    return copy_out(e->capture_times, times, count);
}

mushroom_status mushroom_ensemble_chi_square(const mushroom_ensemble* e, const mushroom_theory* t, size_t bins,
                                             mushroom_chi_square* out)
{
    if (!e || !t || !out)
        return null_arg("ensemble, theory and out");
    return guarded([&] {
        const ChiSquareResult r = capture_time_chi_square(e->capture_times, *t->engine, bins);
        *out = {r.statistic, r.dof, r.p_value, r.bins_used};
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_trace(const mushroom_protocol* p, const mushroom_state* initial, double t_end,
                               const char* csv_path, mushroom_trace_result* out)
{
    if (!p || !initial || !out)
        return null_arg("protocol, initial and out");
    return guarded([&] {
        SimulationOptions opts;
        opts.record_collisions = csv_path != nullptr;
        const ParticleState s0{initial->x, initial->y, initial->vx, initial->vy, initial->t};
        const Trajectory tr = simulate(s0, *p->impl, t_end, opts);
        if (csv_path) {
            std::ofstream f(csv_path);
            if (!f)
                return set_error(MUSHROOM_ERR_CONFIG, std::string("cannot write ") + csv_path);
            f.precision(17);
            f << "time,wall,impact_angle,speed_before,speed_after\n";
            for (const auto& ev : tr.collision_log)
                f << ev.time << ',' << to_string(ev.wall) << ',' << ev.impact_angle << ',' << ev.speed_before << ','
                  << ev.speed_after << '\n';
        }
        out->final_state = to_c(tr.final_state);
        out->outcome = outcome_code(tr.outcome);
        out->collisions = tr.collisions;
        out->captures = 0;
        for (const auto& c : tr.captures)
            out->captures += c.captured ? 1 : 0;
        return MUSHROOM_OK;
    });
}

mushroom_status mushroom_sample_particle(const mushroom_protocol* p, double e0, uint64_t seed, size_t index,
                                         mushroom_state* out)
{
    if (!p || !out)
        return null_arg("protocol and out");
    return guarded([&] {
        if (!(e0 > 0.0))
            throw std::invalid_argument("E0 > 0 violated");
        *out = to_c(sample_particle(p->impl->shape_at(0.0), e0, seed, index));
        return MUSHROOM_OK;
    });
}

}  // extern "C"
