#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mcmin/heuristic.hpp"
#include "mcmin/random.hpp"
#include "mcmin/reductions.hpp"

namespace mcmin {

/// One bench configuration: a model family instance of a given size
/// approximated by a small random-parameter instance of the same family.
struct BenchSpec {
    std::string suite;               // "ipv4" | "drunkard"
    std::vector<int> sizes;          // target |M| values
    int k = 5;                       // approximant budget
    std::vector<Rational> lambdas = {Rational(1), rat(4, 5)};
    Heuristic heuristic = Heuristic::AveragedMarginals;
    std::uint64_t seed = 1;
    double timeout_s = 600.0;        // per row and lambda
    int max_iters = 14;
    Rational p = rat(1, 2);          // model family parameters
    Rational q = rat(1, 2);
    bool with_times = true;          // false: deterministic byte-stable CSV
};

namespace detail {

inline MarkovChain<Rational> bench_model(const std::string& suite, int size, const Rational& p,
                                         const Rational& q) {
    if (suite == "ipv4") {
        if (size < 4) throw McError("ipv4 model needs at least 4 states");
        return gen_ipv4(p, q, size - 3);
    }
    if (suite == "drunkard") {
        if (size < 5) throw McError("drunkard model needs at least 5 states");
        int steps = size - 3;
        return gen_drunkard(p, steps / 2, steps - steps / 2);
    }
    throw McError("unknown bench suite '" + suite + "'");
}

/// Initial approximant: same family, k states, random parameters in (0,1).
inline MarkovChain<Rational> bench_initial(const std::string& suite, int k, Rng& rng) {
    Rational rp = random_unit_rational(rng);
    Rational rq = random_unit_rational(rng);
    if (suite == "ipv4") {
        if (k < 4) throw McError("ipv4 approximant needs k >= 4");
        return gen_ipv4(rp, rq, k - 3);
    }
    if (k < 5) throw McError("drunkard approximant needs k >= 5");
    int steps = k - 3;
    return gen_drunkard(rp, steps / 2, steps - steps / 2);
}

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

}  // namespace detail

/// Runs the experiment protocol and renders a CSV mirroring the classic
/// comparison-table columns: one row per (case, |M|, k) with column groups
/// (d-init, d-final, iters, time) per discount factor. Rows exceeding the
/// timeout are recorded as TO. Deterministic for a fixed seed; pass
/// with_times = false for byte-identical reruns.
inline std::string run_bench(const BenchSpec& spec) {
    std::ostringstream csv;
    csv << "case,states,k";
    for (const auto& lam : spec.lambdas) {
        std::string tag = rat_str(lam);
        csv << ",dinit[" << tag << "],dfinal[" << tag << "],iters[" << tag << "],time[" << tag
            << "]";
    }
    csv << "\n";
    for (int size : spec.sizes) {
        MarkovChain<Rational> model = detail::bench_model(spec.suite, size, spec.p, spec.q);
        MarkovChain<double> model_f = to_float(model);
        csv << spec.suite << "(" << heuristic_name(spec.heuristic) << ")," << size << ","
            << spec.k;
        for (const auto& lam : spec.lambdas) {
            // one sub-seed per (seed, suite, size, k, lambda): reruns of a row
            // are independent of the other rows
            std::uint64_t sub = spec.seed;
            sub = mix_seed(sub ^ std::hash<std::string>{}(spec.suite));
            sub = mix_seed(sub ^ static_cast<std::uint64_t>(size));
            sub = mix_seed(sub ^ static_cast<std::uint64_t>(spec.k));
            sub = mix_seed(sub ^ std::hash<std::string>{}(rat_str(lam)));
            Rng rng(sub);
            MarkovChain<double> init = to_float(detail::bench_initial(spec.suite, spec.k, rng));
            EngineOpts opts;
            opts.deadline = std::chrono::steady_clock::now() +
                            std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(spec.timeout_s));
            auto t0 = std::chrono::steady_clock::now();
            try {
                auto res = approximate_minimize(model_f, init, spec.max_iters, spec.heuristic, lam,
                                                opts);
                double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                  .count();
                csv << "," << detail::fmt_double(res.trace.iters.front().distance) << ","
                    << detail::fmt_double(res.distance) << ","
                    << (res.trace.iters.size() - 1) << ","
                    << (spec.with_times ? detail::fmt_double(secs) : std::string("-"));
            } catch (const ResourceTimeout&) {
                csv << ",TO,TO,TO,TO";
            } catch (const UselessInitialApproximant&) {
                csv << ",1.000000,1.000000,0,"
                    << (spec.with_times ? detail::fmt_double(0.0) : std::string("-"));
            }
        }
        csv << "\n";
    }
    return csv.str();
}

}  // namespace mcmin
