#include <catch2/catch_amalgamated.hpp>

#include "bgw/io.hpp"
#include "oracle_helpers.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using bgw::offspring_distribution;
using bgw::self_similar_measure;
using bgw::closed_form_kind;
using bgw::measure_kind;
using bgw::json;

TEST_CASE("offspring specs parse strictly") {
    const auto pmf = bgw::parse_offspring_spec(
        std::string(R"({"type":"pmf","p":[0.5,0.25,0.15,0.1]})"));
    CHECK(pmf.mean() == Catch::Approx(0.85).epsilon(1e-15));
    CHECK(pmf.max_litter() == 3);

    const auto pd = bgw::parse_offspring_spec(std::string(R"({"type":"pure_death","m":0.5})"));
    CHECK(pd.mean() == 0.5);
    CHECK(pd.max_litter() == 1);

    const auto geo = bgw::parse_offspring_spec(std::string(R"({"type":"geometric","b":0.25})"));
    CHECK(geo.mean() == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

    CHECK_THROWS_AS(bgw::parse_offspring_spec(std::string(R"({"type":"zeta","s":2})")),
                    bgw::invalid_config);
    CHECK_THROWS_AS(
        bgw::parse_offspring_spec(std::string(R"({"type":"pure_death","m":0.5,"x":1})")),
        bgw::invalid_config);
    CHECK_THROWS_AS(bgw::parse_offspring_spec(std::string(R"({"type":"pure_death"})")),
                    bgw::invalid_config);
    CHECK_THROWS_AS(bgw::parse_offspring_spec(std::string(R"({"type":"pmf","p":[0.5,"x"]})")),
                    bgw::invalid_config);
    CHECK_THROWS_AS(bgw::parse_offspring_spec(std::string("{not json")), bgw::invalid_config);
    // Structurally valid but supercritical: the distribution ctor refuses.
    CHECK_THROWS_AS(bgw::parse_offspring_spec(std::string(R"({"type":"pmf","p":[0.0,1.0]})")),
                    bgw::not_subcritical);
}

TEST_CASE("measure specs parse strictly") {
    const auto lu = bgw::parse_measure_spec(std::string(R"({"type":"log_uniform","c":2.5})"),
                                            0.5);
    CHECK(lu.m == 0.5);
    CHECK(lu.log_uniform_weight == 2.5);

    // Atom positions fold into the fundamental band [1, 1/m).
    const auto at = bgw::parse_measure_spec(
        std::string(R"({"type":"atoms","atoms":[[1.25,0.5],[5.0,0.25]]})"), 0.5);
    REQUIRE(at.atoms.size() == 2);
    CHECK(at.atoms[0].first == Catch::Approx(1.25).epsilon(1e-15));
    CHECK(at.atoms[1].first == Catch::Approx(1.25).epsilon(1e-15));
    CHECK(at.fundamental_mass() == Catch::Approx(0.75).epsilon(1e-15));

    const auto ld = bgw::parse_measure_spec(
        std::string(R"({"type":"log_density","cells":[2.0,0.5]})"), 1.0 / 3.0);
    REQUIRE(ld.density_cells.size() == 2);
    CHECK(ld.m == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

    CHECK_THROWS_AS(bgw::parse_measure_spec(std::string(R"({"type":"gaussian"})"), 0.5),
                    bgw::invalid_config);
    CHECK_THROWS_AS(
        bgw::parse_measure_spec(std::string(R"({"type":"log_uniform","c":1,"z":2})"), 0.5),
        bgw::invalid_config);
    CHECK_THROWS_AS(
        bgw::parse_measure_spec(std::string(R"({"type":"atoms","atoms":[[1.25]]})"), 0.5),
        bgw::invalid_config);
    CHECK_THROWS_AS(bgw::parse_measure_spec(std::string("nope"), 0.5), bgw::invalid_config);
    // Valid JSON, invalid measure content.
    CHECK_THROWS_AS(
        bgw::parse_measure_spec(std::string(R"({"type":"atoms","atoms":[[1.25,-1.0]]})"), 0.5),
        bgw::invalid_measure);
}

TEST_CASE("measure csv round-trips losslessly") {
    const auto geo = offspring_distribution::geometric(0.25);
    const auto ospec = json::parse(R"({"type":"geometric","b":0.25})");
    const auto mspec = json::parse(R"({"type":"log_uniform","c":1.0})");

    const auto qsd = bgw::closed_form_measure(geo, 0.5, closed_form_kind::qsd_power, 64);
    std::stringstream ss;
    bgw::write_measure_csv(ss, qsd, ospec, mspec);
    const auto rt = bgw::read_measure_csv(ss);

    REQUIRE(rt.nu.nu.size() == qsd.nu.size());
    for (std::size_t k = 0; k < qsd.nu.size(); ++k) {
        INFO("k=" << k);
        CHECK(rt.nu.nu[k] == qsd.nu[k]); // 17 significant digits: bit-exact
    }
    CHECK_FALSE(rt.nu.includes_zero);
    CHECK(rt.nu.alpha == qsd.alpha);
    CHECK(rt.nu.lambda == qsd.lambda);
    CHECK(rt.nu.trunc_error_hint == qsd.trunc_error_hint);
    CHECK(rt.nu.source.to_string() == qsd.source.to_string());
    CHECK(rt.header.at("offspring_spec") == ospec);
    CHECK(rt.header.at("measure_spec") == mspec);

    // True measure: k starts at 0 and that alone restores includes_zero.
    const auto pd = offspring_distribution::pure_death(0.5);
    const auto dxx = self_similar_measure::log_uniform(0.5, 1.0);
    const auto tru = bgw::true_invariant_measure(pd, -0.75, dxx, 32);
    std::stringstream st;
    bgw::write_measure_csv(st, tru, json::parse(R"({"type":"pure_death","m":0.5})"), mspec);
    const auto rtt = bgw::read_measure_csv(st);
    CHECK(rtt.nu.includes_zero);
    CHECK(rtt.nu.nu[0] == tru.nu[0]);
    CHECK(rtt.nu.nu.back() == tru.nu.back());

    // Source strings survive the trip for every kind.
    const auto ext = bgw::extremal_invariant_measure(pd, 0.25, 32);
    std::stringstream se;
    bgw::write_measure_csv(se, ext, ospec, mspec);
    const auto rte = bgw::read_measure_csv(se);
    CHECK(rte.nu.source.kind == measure_kind::extremal);
    CHECK(rte.nu.source.t == 0.25);

    const auto num = bgw::integral_measure(
        geo, 0.5, bgw::self_similar_measure::log_uniform(geo.mean(), 1.0), 24);
    std::stringstream sn;
    bgw::write_measure_csv(sn, num, ospec, mspec);
    CHECK(bgw::read_measure_csv(sn).nu.source.kind == measure_kind::integral);

    // Malformed inputs are rejected with a parse error, not a bad measure.
    std::stringstream bad1("k,nu_k\n1,0.5\n");
    CHECK_THROWS_AS(bgw::read_measure_csv(bad1), bgw::invalid_config);
    std::stringstream bad2("# {\"alpha\":0.5,\"lambda\":0.7}\nk,nu_k\n");
    CHECK_THROWS_AS(bgw::read_measure_csv(bad2), bgw::invalid_config);
    std::stringstream bad3("# {\"alpha\":0.5,\"lambda\":0.7}\nk,nu_k\n1;0.5\n");
    CHECK_THROWS_AS(bgw::read_measure_csv(bad3), bgw::invalid_config);
    std::stringstream bad4("# not json\nk,nu_k\n1,0.5\n");
    CHECK_THROWS_AS(bgw::read_measure_csv(bad4), bgw::invalid_config);
}

TEST_CASE("reports serialize to JSON") {
    const auto geo = offspring_distribution::geometric(0.25);
    const auto nm = bgw::closed_form_measure(geo, 1.0, closed_form_kind::qsd_power, 64);
    const auto rep =
        bgw::functional_equation_residual(nm, geo, geo.mean(), {0.1, 0.3, 0.5});
    const json j = bgw::report_to_json(rep);
    CHECK(j.at("check_name") == "functional_equation");
    CHECK(j.at("passed").is_boolean());
    CHECK(j.at("passed").get<bool>());
    CHECK(j.at("residual").get<double>() == rep.residual);
    CHECK(j.at("tolerance").get<double>() == rep.tolerance);
    CHECK(j.at("details").size() == 3);
    CHECK(j.at("extras").contains("truncation_leak"));
    // Serialized form is valid JSON text round-trip.
    CHECK(json::parse(j.dump()) == j);

    const auto pd = offspring_distribution::pure_death(0.5);
    const auto mc = bgw::yaglom_mc(pd, 2, 10000, 99ull, 8);
    const json mj = bgw::mc_report_to_json(mc);
    // n_samples counts the conditioned (surviving) sample; paths are extra.
    CHECK(mj.at("extras").at("paths").get<double>() == 10000.0);
    CHECK(static_cast<double>(mj.at("n_samples").get<std::size_t>()) ==
          10000.0 * mj.at("extras").at("survival_fraction").get<double>());
    CHECK(mj.at("seed").get<std::uint64_t>() == 99ull);
    CHECK(mj.at("empirical_pmf").size() == 9);
    CHECK(mj.at("reference_pmf").size() == 9);
    CHECK(mj.at("tv_distance").is_number());
    CHECK(mj.at("chi2_stat").is_number());
    CHECK(mj.at("extras").contains("p_n"));
    CHECK(mj.at("extras").contains("survival_fraction"));
    CHECK(json::parse(mj.dump()) == mj);
}
