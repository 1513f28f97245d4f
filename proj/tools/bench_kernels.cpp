// Benchmark of the OpenMP kernels against their serial reference
// implementations: cone verification, covering-graph construction, return
// grid sampling, and the stability probe. Prints wall time and speedup per
// kernel; results of both paths are compared for equality.

#include <chrono>
#include <cmath>
#include <iostream>

#include "orbitforge/band_covering.hpp"
#include "orbitforge/models.hpp"
#include "orbitforge/parallel.hpp"
#include "orbitforge/sections.hpp"

namespace of = orbitforge;

namespace {

template <typename F>
double timed(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double t_serial, double t_parallel, bool equal) {
    std::cout << name << ": serial " << t_serial << " s, parallel "
              << t_parallel << " s, speedup "
              << (t_parallel > 0 ? t_serial / t_parallel : 0.0)
              << (equal ? "" : "  [MISMATCH]") << "\n";
}

}  // namespace

int main() {
    std::cout << "threads: " << of::thread_count() << "\n";

    // Kernel 1: expansion-cone verification on the geo-Lorenz map.
    {
        const auto model = of::geo_lorenz(1.9, 0.3);
        of::HyperbolicityReport a, b;
        const double ts =
            timed([&] { a = of::verify_lambda_hyperbolic_serial(model.map, 4000000); });
        const double tp =
            timed([&] { b = of::verify_lambda_hyperbolic(model.map, 4000000); });
        const bool eq = a.min_expansion == b.min_expansion &&
                        a.cone_invariance_fraction == b.cone_invariance_fraction &&
                        a.samples_used == b.samples_used && a.verdict == b.verdict;
        report("verify_lambda_hyperbolic", ts, tp, eq);
    }

    // Kernel 2: covering-graph construction (many seeds to give the
    // parallel loop enough work).
    {
        const auto model = of::geo_lorenz(1.9, 0.3);
        const auto alphabet = of::build_band_alphabet(model.map);
        of::GraphOptions opts;
        opts.seeds_per_band = 64;
        of::CoveringGraph a, b;
        const double ts =
            timed([&] { a = of::build_covering_graph_serial(model.map, alphabet, opts); });
        const double tp =
            timed([&] { b = of::build_covering_graph(model.map, alphabet, opts); });
        bool eq = a.edge_count() == b.edge_count();
        for (size_t i = 0; eq && i < a.adjacency.size(); ++i)
            for (size_t j = 0; eq && j < a.adjacency[i].size(); ++j)
                eq = a.adjacency[i][j].to == b.adjacency[i][j].to &&
                     a.adjacency[i][j].iterates == b.adjacency[i][j].iterates;
        report("build_covering_graph", ts, tp, eq);
    }

    // Kernel 3: return-map grid sampling on the linear normal-form flow.
    {
        const auto sys = of::linear_field(
            (of::Mat3() << 11.8277, 0, 0, 0, -22.8277, 0, 0, 0, -2.6667).finished());
        of::SingularityInfo sing = of::classify_equilibrium(sys, of::Vec3::Zero());
        const auto top =
            of::build_section(sys, sing, of::SectionSide::top, 0.2, 0.05);
        const auto exit_plane = of::make_plane_section(
            of::Vec3(1.0, 0.0, 0.0), of::Vec3::UnitY(), of::Vec3::UnitZ(), 2.0,
            2.0, sys);
        const auto exit_neg = of::make_plane_section(
            of::Vec3(-1.0, 0.0, 0.0), of::Vec3::UnitY(), of::Vec3::UnitZ(), 2.0,
            2.0, sys);
        const std::vector<of::CrossSection> sections{top, exit_plane, exit_neg};
        of::ReturnGrid a, b;
        const double ts = timed(
            [&] { a = of::sample_return_grid_serial(sys, sections, 161, 21); });
        const double tp =
            timed([&] { b = of::sample_return_grid(sys, sections, 161, 21); });
        bool eq = true;
        for (size_t s = 0; eq && s < a.samples.size(); ++s)
            for (size_t i = 0; eq && i < a.samples[s].size(); ++i)
                eq = a.samples[s][i].outcome == b.samples[s][i].outcome &&
                     a.samples[s][i].return_time == b.samples[s][i].return_time;
        report("sample_return_grid", ts, tp, eq);
    }

    // Kernel 4: stability probe on the linear sink.
    {
        const auto sys = of::linear_field(
            (of::Mat3() << -1, 0, 0, 0, -1, 0, 0, 0, -1).finished());
        const std::vector<of::Vec3> set{of::Vec3::Zero()};
        of::EscapeReport a, b;
        const double ts = timed([&] {
            a = of::lyapunov_stability_probe_serial(sys, set, 2.0, 1.0, 400, 50.0, 7);
        });
        const double tp = timed([&] {
            b = of::lyapunov_stability_probe(sys, set, 2.0, 1.0, 400, 50.0, 7);
        });
        const bool eq = a.escaped == b.escaped && a.inconclusive == b.inconclusive;
        report("lyapunov_stability_probe", ts, tp, eq);
    }

    return 0;
}
