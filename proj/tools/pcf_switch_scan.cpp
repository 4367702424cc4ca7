// Scans the supported region of D_nu(z) and records, per order and ray, where
// the Maclaurin series stops certifying 1e-8 and where the asymptotic series
// starts to. Used to pick the routing constants in special_functions.hpp.

#include <CLI11.hpp>

#include <iostream>

#include <pulab/io.hpp>
#include <pulab/special_functions.hpp>

using namespace pulab;

int main(int argc, char** argv) {
    CLI::App app{"D_nu(z) route scan"};
    double target = 1e-8, step = 0.5, nu_step = 12.25;
    std::string output = "pcf_switch_scan.csv";
    app.add_option("--target", target, "accuracy a route must certify");
    app.add_option("--radius-step", step, "radial step");
    app.add_option("--nu-step", nu_step, "order grid step (real and imaginary parts)");
    app.add_option("--output", output, "artifact path");
    CLI11_PARSE(app, argc, argv);

    const ExperimentConfig cfg{"pcf-switch-scan",
                               {{"target", target}, {"radius_step", step}, {"nu_step", nu_step}, {"output", output}}};
    const auto path = resolve_output(output);
    auto out = open_output(path);
    CsvWriter w(out, cfg,
                {"nu_re", "nu_im", "angle", "maclaurin_max_radius", "asymptotic_min_radius", "overlap",
                 "max_disagreement_in_overlap"});

    using namespace pulab::detail;
    double worst_mac = 0.0, best_asym = kPcfMaxAbsZ;
    int rays = 0, without_overlap = 0;
    for (double a = -49.0; a <= 49.0; a += nu_step)
        for (double b = -49.0; b <= 49.0; b += nu_step) {
            const cplx nu(a, b);
            if (std::abs(nu) > kPcfMaxAbsNu) continue;
            for (double angle : {0.0, pi / 8, pi / 4, 3 * pi / 8, pi / 2}) {
                double mac_max = 0.0, asym_min = kPcfMaxAbsZ + 1.0, disagreement = 0.0;
                bool overlap = false;
                for (double r = step; r <= kPcfMaxAbsZ + 1e-12; r += step) {
                    const cl z = to_cl(std::polar(r, angle));
                    const Scaled m = maclaurin(to_cl(nu), z), s = asymptotic(to_cl(nu), z);
                    const bool mac_ok = std::isfinite(m.err) && m.err <= target;
                    const bool asym_ok = std::isfinite(s.err) && s.err <= target;
                    if (mac_ok) mac_max = r;
                    if (asym_ok && r < asym_min) asym_min = r;
                    if (mac_ok && asym_ok) {
                        overlap = true;
                        disagreement = std::max(disagreement, static_cast<double>(rel_diff(m, s)));
                    }
                }
                ++rays;
                if (!overlap) ++without_overlap;
                worst_mac = std::max(worst_mac, mac_max);
                best_asym = std::min(best_asym, asym_min);
                w.row({a, b, angle, mac_max, asym_min, overlap, disagreement});
            }
        }
    std::cout << path.string() << '\n'
              << "largest radius where the series certifies " << format_number(target) << ": " << worst_mac << '\n'
              << "rays without a series/asymptotic overlap: " << without_overlap << " of " << rays << '\n';
    return 0;
}
