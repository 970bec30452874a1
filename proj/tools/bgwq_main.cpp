// bgwq: command-line driver for the invariant-measure library.
//
// One subcommand per library capability:
//   yaglom       conditioned-limit table (H and its pmf)
//   construct    build an invariant measure / QSD, optionally verify it
//   verify       re-verify a measure CSV produced earlier
//   recover      rescaled-lattice recovery of the driving measure
//   hoppe        scaling-function roundtrip check
//   joffe        partial sums of the expected-progeny series
//   mc           Monte Carlo samplers and consistency checks
//   gamma-check  quadrature vs closed-form gamma integral
//
// Exit codes: 0 all requested checks passed, 2 at least one verification
// failed its tolerance, 1 input error. Input errors print a single line
// "error: <Name>: <message>" on stderr.

#include <CLI11.hpp>

#include <bgw/bgw.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace {

using bgw::json;

// Verification verdicts accumulate here; main() turns them into the exit code.
int g_exit = 0;

void note_verdict(bool passed) {
    if (!passed) g_exit = 2;
}

std::vector<double> default_zgrid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(static_cast<double>(i) / 20.0);
    return g;
}

// Table sink: path "-" (or empty) means stdout.
class sink {
  public:
    explicit sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw bgw::invalid_config("cannot open output file: " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

bgw::offspring_distribution parse_dist(const std::string& text) {
    return bgw::parse_offspring_spec(text);
}

// Serializes the measure actually used (post-normalization) so the CSV header
// describes what the coefficients were computed from.
json measure_to_json(const bgw::self_similar_measure& lam) {
    if (!lam.atoms.empty()) {
        json arr = json::array();
        for (const auto& [t, w] : lam.atoms) arr.push_back(json::array({t, w}));
        return json{{"type", "atoms"}, {"atoms", arr}};
    }
    if (!lam.density_cells.empty())
        return json{{"type", "log_density"}, {"cells", lam.density_cells}};
    return json{{"type", "log_uniform"}, {"c", lam.log_uniform_weight}};
}

struct csv_input {
    bgw::measure_csv data;
    bgw::offspring_distribution dist;
};

// Reads a measure CSV ("-" = stdin) and resolves the offspring law from the
// --offspring override or the embedded header spec.
csv_input load_measure_csv(const std::string& path, const std::string& offspring) {
    bgw::measure_csv data = [&] {
        if (path == "-") return bgw::read_measure_csv(std::cin);
        std::ifstream in(path);
        if (!in) throw bgw::invalid_config("cannot open measure csv: " + path);
        return bgw::read_measure_csv(in);
    }();
    bgw::offspring_distribution dist = [&] {
        if (!offspring.empty()) return parse_dist(offspring);
        if (data.header.contains("offspring_spec"))
            return bgw::parse_offspring_spec(data.header["offspring_spec"]);
        throw bgw::invalid_config(
            "no offspring law: pass --offspring or use a csv with an offspring_spec header");
    }();
    return {std::move(data), std::move(dist)};
}

void print_report(const bgw::verification_report& rep) {
    std::cout << bgw::report_to_json(rep).dump() << "\n";
}

// ---------------------------------------------------------------------------
// yaglom
// ---------------------------------------------------------------------------

struct yaglom_opts {
    std::string offspring;
    std::size_t order = 64;
    double tol = 1e-12;
    std::string out = "-";
};

void run_yaglom(const yaglom_opts& o) {
    const auto dist = parse_dist(o.offspring);
    const auto yag = bgw::yaglom_limit(dist, o.order, o.tol);
    json header;
    header["m"] = dist.mean();
    header["iterations"] = yag.iterations;
    header["sup_delta"] = yag.sup_delta;
    header["last_ratio"] = yag.ratio_seq.empty() ? dist.mean() : yag.ratio_seq.back();
    header["offspring_spec"] = json::parse(o.offspring);
    sink s(o.out);
    s.os() << "# " << header.dump() << "\n";
    s.os() << "k,nu_k\n";
    for (std::size_t k = 1; k < yag.nu_min.size(); ++k)
        s.os() << k << "," << bgw::detail::format17(yag.nu_min[k]) << "\n";
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

struct construct_opts {
    std::string offspring;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    std::string measure;
    bool normalize = false;
    bool include_zero = false;
    double extremal_t = -1.0;
    std::size_t order = 1024;
    double rel_tol = 1e-10;
    bool verify = false;
    std::vector<double> grid;
    double fe_tol = 1e-8;
    double eigen_tol = 1e-6;
    std::size_t eigen_k = 0;
    std::size_t eigen_k_report = 0;
    std::string out;
};

void run_construct(const construct_opts& o) {
    const auto dist = parse_dist(o.offspring);
    bgw::invariant_measure nu;
    json mspec;

    if (o.extremal_t >= 0.0) {
        if (!std::isnan(o.alpha) && o.alpha != 0.0)
            throw bgw::invalid_config("construct: extremal measures live at alpha = 0");
        nu = bgw::extremal_invariant_measure(dist, o.extremal_t, o.order, o.rel_tol);
        mspec = json{{"type", "atoms"},
                     {"atoms", json::array({json::array(
                                   {std::pow(dist.mean(), -o.extremal_t), 1.0})})}};
    } else {
        if (std::isnan(o.alpha)) throw bgw::invalid_config("construct: --alpha is required");
        if (!o.measure.empty()) {
            auto lam = bgw::parse_measure_spec(o.measure, dist.mean());
            if (o.normalize) lam = bgw::normalize_for_qsd(lam, o.alpha, o.rel_tol);
            nu = o.include_zero
                     ? bgw::true_invariant_measure(dist, o.alpha, lam, o.order, o.rel_tol)
                     : bgw::integral_measure(dist, o.alpha, lam, o.order, o.rel_tol);
            mspec = measure_to_json(lam);
        } else {
            if (o.include_zero)
                throw bgw::invalid_config(
                    "construct: --include-zero needs an explicit --measure");
            if (o.alpha > 1.0)
                throw bgw::out_of_range_alpha(
                    "construct: closed forms need alpha <= 1 (integral route: alpha < 1)");
            const auto kind = o.alpha > 0.0 ? bgw::closed_form_kind::qsd_power
                              : o.alpha == 0.0 ? bgw::closed_form_kind::log
                                               : bgw::closed_form_kind::negative_power;
            nu = bgw::closed_form_measure(dist, o.alpha, kind, o.order);
            mspec = json{{"type", "log_uniform"}, {"c", 1.0}};
        }
    }

    {
        sink s(o.out);
        bgw::write_measure_csv(s.os(), nu, json::parse(o.offspring), mspec);
    }

    if (o.verify) {
        const auto grid = o.grid.empty() ? default_zgrid() : o.grid;
        const auto fe =
            bgw::functional_equation_residual(nu, dist, nu.lambda, grid, o.fe_tol);
        const std::size_t ek =
            o.eigen_k ? o.eigen_k : std::min<std::size_t>(nu.K(), 512);
        const std::size_t ekr = o.eigen_k_report ? o.eigen_k_report : ek / 4;
        const auto eg = bgw::eigen_residual(nu, dist, nu.lambda, ek, ekr, o.eigen_tol);
        print_report(fe);
        print_report(eg);
        note_verdict(fe.passed);
        note_verdict(eg.passed);
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct verify_opts {
    std::string measure_csv;
    std::string offspring;
    std::vector<std::string> checks{"fe", "eigen"};
    std::vector<double> grid;
    double fe_tol = 1e-8;
    double eigen_tol = 1e-6;
    std::size_t eigen_k = 0;
    std::size_t eigen_k_report = 0;
};

void run_verify(const verify_opts& o) {
    const auto in = load_measure_csv(o.measure_csv, o.offspring);
    const auto& nu = in.data.nu;
    for (const auto& check : o.checks) {
        if (check == "fe") {
            const auto grid = o.grid.empty() ? default_zgrid() : o.grid;
            const auto rep =
                bgw::functional_equation_residual(nu, in.dist, nu.lambda, grid, o.fe_tol);
            print_report(rep);
            note_verdict(rep.passed);
        } else if (check == "eigen") {
            const std::size_t ek =
                o.eigen_k ? o.eigen_k : std::min<std::size_t>(nu.K(), 512);
            const std::size_t ekr = o.eigen_k_report ? o.eigen_k_report : ek / 4;
            const auto rep =
                bgw::eigen_residual(nu, in.dist, nu.lambda, ek, ekr, o.eigen_tol);
            print_report(rep);
            note_verdict(rep.passed);
        } else {
            throw bgw::invalid_config("verify: unknown check '" + check +
                                      "' (expected fe or eigen)");
        }
    }
}

// ---------------------------------------------------------------------------
// recover
// ---------------------------------------------------------------------------

struct recover_opts {
    std::string measure_csv;
    std::string offspring;
    int n = 0;
    double x_lo = 0.25;
    double x_hi = 4.0;
    std::size_t bins = 16;
};

void run_recover(const recover_opts& o) {
    const auto in = load_measure_csv(o.measure_csv, o.offspring);
    const auto rec =
        bgw::recover_lambda(in.data.nu, in.dist, o.n, {o.x_lo, o.x_hi, o.bins});
    json out;
    out["n"] = rec.n;
    out["p_n"] = rec.p_n;
    out["lattice_points"] = rec.lattice_points;
    out["bin_edges"] = rec.bin_edges;
    out["bin_mass"] = rec.bin_mass;
    std::cout << out.dump() << "\n";
}

// ---------------------------------------------------------------------------
// hoppe / joffe
// ---------------------------------------------------------------------------

struct hoppe_opts {
    std::string offspring;
    double alpha = 0.5;
    std::size_t order = 256;
    std::vector<double> grid;
    double tol = 1e-8;
};

void run_hoppe(const hoppe_opts& o) {
    const auto dist = parse_dist(o.offspring);
    const auto grid = o.grid.empty() ? default_zgrid() : o.grid;
    const auto rep = bgw::hoppe_roundtrip(dist, o.alpha, o.order, grid, o.tol);
    print_report(rep);
    note_verdict(rep.passed);
}

struct joffe_opts {
    std::string offspring;
    int terms = 50;
};

void run_joffe(const joffe_opts& o) {
    const auto dist = parse_dist(o.offspring);
    const auto sums = bgw::joffe_partial_sums(dist, o.terms);
    json out;
    out["m"] = dist.mean();
    out["partial_sums"] = sums;
    std::cout << out.dump() << "\n";
}

// ---------------------------------------------------------------------------
// mc
// ---------------------------------------------------------------------------

struct mc_opts {
    std::string mode;
    std::string offspring;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    std::string measure = R"({"type":"log_uniform","c":1.0})";
    bool measure_given = false;
    std::size_t samples = 100000;
    std::uint64_t seed = 20250818;
    std::size_t table_k = 1024;
    std::size_t k_ref = 64;
    std::size_t order = 1024;
    std::size_t k = 0;
    int n = 1;
    double rel_tol = 1e-10;
    double tv_limit = -1.0;
};

void finish_mc(const bgw::mc_report& rep, json extra, double tv_limit) {
    json out = bgw::mc_report_to_json(rep);
    for (auto& [key, value] : extra.items()) out[key] = value;
    if (tv_limit >= 0.0) {
        out["tv_limit"] = tv_limit;
        out["passed"] = rep.tv_distance <= tv_limit;
        note_verdict(rep.tv_distance <= tv_limit);
    }
    std::cout << out.dump() << "\n";
}

void run_mc(const mc_opts& o) {
    const auto dist = parse_dist(o.offspring);
    if (o.mode == "qsd") {
        if (std::isnan(o.alpha)) throw bgw::invalid_config("mc qsd: --alpha is required");
        auto lam = bgw::parse_measure_spec(o.measure, dist.mean());
        const double total = bgw::qsd_normalization_integral(lam, o.alpha, o.rel_tol);
        lam = lam.scaled(1.0 / total);
        const auto spec = bgw::subordinator_spec::semi_stable(o.alpha, lam, o.rel_tol);
        bgw::qsd_sampler sampler(dist, spec, o.table_k, o.rel_tol);
        const std::size_t ref_order = std::max<std::size_t>(o.order, 4 * o.k_ref);
        const auto ref =
            bgw::integral_measure(dist, o.alpha, lam, ref_order, o.rel_tol);
        std::vector<double> ref_pmf(o.k_ref + 1, 0.0);
        for (std::size_t j = 1; j <= o.k_ref && j < ref.nu.size(); ++j)
            ref_pmf[j] = ref.nu[j];
        const auto rep = bgw::sample_qsd_report(sampler, o.samples, o.seed, ref_pmf);
        finish_mc(rep, json{{"mode", "qsd"}, {"normalization_scale", 1.0 / total}},
                  o.tv_limit);
    } else if (o.mode == "onestep") {
        if (std::isnan(o.alpha))
            throw bgw::invalid_config("mc onestep: --alpha is required");
        bgw::invariant_measure nu;
        if (o.measure_given) {
            auto lam = bgw::parse_measure_spec(o.measure, dist.mean());
            lam = bgw::normalize_for_qsd(lam, o.alpha, o.rel_tol);
            nu = bgw::integral_measure(dist, o.alpha, lam, o.order, o.rel_tol);
        } else {
            nu = bgw::closed_form_measure(dist, o.alpha, bgw::closed_form_kind::qsd_power,
                                          o.order);
        }
        const std::size_t k = o.k ? o.k : nu.K() / 2;
        const auto rep = bgw::quasi_stationarity_test(dist, nu.nu, k, o.samples, o.seed);
        finish_mc(rep, json{{"mode", "onestep"}}, o.tv_limit);
    } else if (o.mode == "yaglom") {
        const auto rep = bgw::yaglom_mc(dist, o.n, o.samples, o.seed, o.k_ref);
        finish_mc(rep, json{{"mode", "yaglom"}}, o.tv_limit);
    } else {
        throw bgw::invalid_config("mc: unknown --mode '" + o.mode +
                                  "' (expected qsd, onestep, or yaglom)");
    }
}

// ---------------------------------------------------------------------------
// gamma-check
// ---------------------------------------------------------------------------

struct gamma_opts {
    double a = 0.5;
    double alpha = 0.5;
    double rel_tol = 1e-10;
    double tol = 1e-8;
};

void run_gamma(const gamma_opts& o) {
    const auto res = bgw::gamma_integral_check(o.a, o.alpha, o.rel_tol);
    const bool passed = res.rel_error <= o.tol;
    json out;
    out["check_name"] = "gamma_integral";
    out["a"] = o.a;
    out["alpha"] = o.alpha;
    out["numeric"] = res.numeric;
    out["closed_form"] = res.closed_form;
    out["residual"] = res.rel_error;
    out["tolerance"] = o.tol;
    out["passed"] = passed;
    std::cout << out.dump() << "\n";
    note_verdict(passed);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"invariant measures and quasi-stationary distributions of "
                 "subcritical branching processes killed at zero"};
    app.require_subcommand(1);

    auto yag = std::make_shared<yaglom_opts>();
    auto* cy = app.add_subcommand("yaglom", "conditioned-limit table");
    cy->add_option("--offspring", yag->offspring, "offspring law spec (json)")->required();
    cy->add_option("--order", yag->order, "series truncation order");
    cy->add_option("--tol", yag->tol, "sup-norm stopping tolerance");
    cy->add_option("--out", yag->out, "output csv path ('-' = stdout)");
    cy->callback([yag] { run_yaglom(*yag); });

    auto con = std::make_shared<construct_opts>();
    auto* cc = app.add_subcommand("construct", "build an invariant measure or QSD");
    cc->add_option("--offspring", con->offspring, "offspring law spec (json)")->required();
    cc->add_option("--alpha", con->alpha, "exponent (lambda = m^alpha)");
    cc->add_option("--measure", con->measure, "driving measure spec (json)");
    cc->add_flag("--normalize", con->normalize, "rescale the measure to the QSD condition");
    cc->add_flag("--include-zero", con->include_zero,
                 "unkilled invariant measure with mass at 0 (alpha < 0)");
    cc->add_option("--extremal-t", con->extremal_t,
                   "extremal measure parameter t in [0,1) (alpha = 0)");
    cc->add_option("--order", con->order, "series truncation order");
    cc->add_option("--rel-tol", con->rel_tol, "quadrature relative tolerance");
    cc->add_flag("--verify", con->verify, "run verification checks on the result");
    cc->add_option("--grid", con->grid, "z-grid for the functional-equation check");
    cc->add_option("--fe-tol", con->fe_tol, "functional-equation tolerance");
    cc->add_option("--eigen-tol", con->eigen_tol, "finite-section tolerance");
    cc->add_option("--eigen-k", con->eigen_k, "finite-section size (default min(K,512))");
    cc->add_option("--eigen-k-report", con->eigen_k_report,
                   "rows entering the finite-section residual (default eigen-k/4)");
    cc->add_option("--out", con->out, "measure csv path ('-' = stdout)");
    cc->callback([con] { run_construct(*con); });

    auto ver = std::make_shared<verify_opts>();
    auto* cv = app.add_subcommand("verify", "re-verify a measure csv");
    cv->add_option("--measure-csv", ver->measure_csv, "measure csv path ('-' = stdin)")
        ->required();
    cv->add_option("--offspring", ver->offspring,
                   "offspring law spec (default: csv header)");
    cv->add_option("--checks", ver->checks, "checks to run (fe, eigen)")
        ->delimiter(',');
    cv->add_option("--grid", ver->grid, "z-grid for the functional-equation check");
    cv->add_option("--fe-tol", ver->fe_tol, "functional-equation tolerance");
    cv->add_option("--eigen-tol", ver->eigen_tol, "finite-section tolerance");
    cv->add_option("--eigen-k", ver->eigen_k, "finite-section size (default min(K,512))");
    cv->add_option("--eigen-k-report", ver->eigen_k_report,
                   "rows entering the finite-section residual (default eigen-k/4)");
    cv->callback([ver] { run_verify(*ver); });

    auto rec = std::make_shared<recover_opts>();
    auto* cr = app.add_subcommand("recover", "recover the driving measure from a csv");
    cr->add_option("--measure-csv", rec->measure_csv, "measure csv path ('-' = stdin)")
        ->required();
    cr->add_option("--offspring", rec->offspring,
                   "offspring law spec (default: csv header)");
    cr->add_option("--n", rec->n, "generation used for the rescaling")->required();
    cr->add_option("--x-lo", rec->x_lo, "window lower edge");
    cr->add_option("--x-hi", rec->x_hi, "window upper edge");
    cr->add_option("--bins", rec->bins, "log-uniform bin count");
    cr->callback([rec] { run_recover(*rec); });

    auto hop = std::make_shared<hoppe_opts>();
    auto* ch = app.add_subcommand("hoppe", "scaling-function roundtrip check");
    ch->add_option("--offspring", hop->offspring, "offspring law spec (json)")->required();
    ch->add_option("--alpha", hop->alpha, "exponent in (0,1)")->required();
    ch->add_option("--order", hop->order, "series truncation order");
    ch->add_option("--grid", hop->grid, "z-grid for the roundtrip residual");
    ch->add_option("--tol", hop->tol, "roundtrip tolerance");
    ch->callback([hop] { run_hoppe(*hop); });

    auto jof = std::make_shared<joffe_opts>();
    auto* cj = app.add_subcommand("joffe", "expected-progeny partial sums");
    cj->add_option("--offspring", jof->offspring, "offspring law spec (json)")->required();
    cj->add_option("--terms", jof->terms, "number of partial sums");
    cj->callback([jof] { run_joffe(*jof); });

    auto mc = std::make_shared<mc_opts>();
    auto* cm = app.add_subcommand("mc", "Monte Carlo samplers and checks");
    cm->add_option("--mode", mc->mode, "qsd, onestep, or yaglom")->required();
    cm->add_option("--offspring", mc->offspring, "offspring law spec (json)")->required();
    cm->add_option("--alpha", mc->alpha, "exponent in (0,1)");
    cm->add_option("--measure", mc->measure, "driving measure spec (json)");
    cm->add_option("--samples", mc->samples, "sample count (paths for mode=yaglom)");
    cm->add_option("--seed", mc->seed, "master seed");
    cm->add_option("--table-k", mc->table_k, "initial sampler table size");
    cm->add_option("--k-ref", mc->k_ref, "reference pmf support size");
    cm->add_option("--order", mc->order, "reference measure truncation order");
    cm->add_option("--k", mc->k, "one-step support cutoff (default order/2)");
    cm->add_option("--n", mc->n, "generations for mode=yaglom");
    cm->add_option("--rel-tol", mc->rel_tol, "quadrature relative tolerance");
    cm->add_option("--tv-limit", mc->tv_limit,
                   "fail (exit 2) when total variation exceeds this");
    cm->callback([mc, cm] {
        mc->measure_given = cm->count("--measure") > 0;
        run_mc(*mc);
    });

    auto gam = std::make_shared<gamma_opts>();
    auto* cg = app.add_subcommand("gamma-check", "quadrature vs closed-form gamma integral");
    cg->add_option("--a", gam->a, "scale parameter in (0,1]")->required();
    cg->add_option("--alpha", gam->alpha, "exponent < 1")->required();
    cg->add_option("--rel-tol", gam->rel_tol, "quadrature relative tolerance");
    cg->add_option("--tol", gam->tol, "acceptance tolerance on the relative error");
    cg->callback([gam] { run_gamma(*gam); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.get_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const bgw::error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 1;
    }
    return g_exit;
}
