// Command line front end: validate a model file, run the analytic pipeline
// onto CSV grids, estimate the same quantities by simulation, or do both and
// compare. Exit codes: 0 success, 2 input/schema problem, 3 model fails
// validation, 4 numerical failure, 5 analytics and simulation disagree.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmrisk/mmrisk.hpp"

namespace {

using mmrisk::Matrix;
using mmrisk::Vector;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string iso8601_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Manifest {
    std::string command;
    std::string model_path;
    std::string parameters;
    std::string seed = "-";
};

void write_manifest(std::ostream& os, const Manifest& man) {
    os << "# tool: mmrisk " << mmrisk::version_string << "\n";
    os << "# command: " << man.command << "\n";
    os << "# model: " << man.model_path << "\n";
    os << "# parameters: " << man.parameters << "\n";
    os << "# seed: " << man.seed << "\n";
    os << "# wall_clock: " << iso8601_now() << "\n";
}

struct Grid {
    double a = 0.0, b = 0.0, step = 0.0;
    std::vector<double> points;
};

Grid parse_grid(const std::string& text, const std::string& flag) {
    auto bad = [&](const std::string& why) {
        throw mmrisk::SchemaError(flag + ": " + why + " (expected a:b:step, got '" + text + "')");
    };
    std::vector<double> parts;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = text.find(':', pos);
        std::string piece = text.substr(pos, next == std::string::npos ? next : next - pos);
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(piece, &used));
            if (used != piece.size()) bad("not a number: '" + piece + "'");
        } catch (const std::logic_error&) {
            bad("not a number: '" + piece + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    if (parts.size() != 3) bad("needs three fields");
    Grid g{parts[0], parts[1], parts[2], {}};
    if (!(std::isfinite(g.a) && std::isfinite(g.b) && std::isfinite(g.step))) bad("non-finite");
    if (g.step <= 0.0) bad("step must be positive");
    if (g.b < g.a) bad("end before start");
    auto n = static_cast<std::size_t>((g.b - g.a) / g.step + 1e-9) + 1;
    if (n > 2000001) bad("more than 2e6 points");
    g.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) g.points.push_back(g.a + static_cast<double>(k) * g.step);
    return g;
}

mmrisk::ValidatedModel load_model(const std::string& path) {
    return mmrisk::validate_spec(mmrisk::read_model(path));
}

// Opens --out for writing, or returns stdout when no path was given.
class OutFile {
public:
    explicit OutFile(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw mmrisk::SchemaError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

// ---------------------------------------------------------------- validate

int run_validate(const Manifest& man, const std::string& model_path) {
    auto model = load_model(model_path);
    write_manifest(std::cout, man);
    const int m = model.states();
    std::cout << "states," << m << "\n";
    std::cout << "drift," << fmt(model.drift()) << "\n";
    for (int k = 0; k < m; ++k)
        std::cout << "stationary_" << (k + 1) << "," << fmt(model.pi()(k)) << "\n";
    auto dom = mmrisk::cumulant_domain(model);
    std::cout << "cumulant_domain_lo," << fmt(dom.r_lo) << "\n";
    std::cout << "cumulant_domain_hi," << fmt(dom.r_hi) << "\n";
    std::cout << "valid,1\n";
    return 0;
}

// ----------------------------------------------------------------- analyze

std::string sibling_path(const std::string& out, const std::string& suffix) {
    std::filesystem::path p(out);
    std::filesystem::path q = p.parent_path() / (p.stem().string() + suffix);
    return q.string();
}

int run_analyze(const Manifest& man, const std::string& model_path,
                const std::string& u_grid_text, const std::string& z_grid_text,
                const std::string& out_path) {
    Grid u_grid = parse_grid(u_grid_text, "--u-grid");
    Grid z_grid = parse_grid(z_grid_text, "--z-grid");

    auto model = load_model(model_path);
    const int m = model.states();

    auto fact = mmrisk::run_factorization(model);
    auto cert = mmrisk::lundberg_certificate(model);
    mmrisk::OvershootAnalysis analysis(model);
    auto ladder = mmrisk::ladder_measure(model);

    std::ofstream main_out(out_path);
    if (!main_out) throw mmrisk::SchemaError("cannot open output file '" + out_path + "'");
    write_manifest(main_out, man);
    main_out << "u";
    for (int i = 0; i < m; ++i) main_out << ",ruin_" << (i + 1);
    for (int i = 0; i < m; ++i) main_out << ",bound_lo_" << (i + 1);
    for (int i = 0; i < m; ++i) main_out << ",bound_hi_" << (i + 1);
    main_out << "\n";
    for (double u : u_grid.points) {
        main_out << fmt(u);
        for (int i = 0; i < m; ++i)
            main_out << "," << fmt(mmrisk::ruin_probability(fact.infimum, i, u));
        for (int i = 0; i < m; ++i)
            main_out << "," << fmt(mmrisk::lundberg_bounds(cert, i, u).lower);
        for (int i = 0; i < m; ++i)
            main_out << "," << fmt(mmrisk::lundberg_bounds(cert, i, u).upper);
        main_out << "\n";
    }

    const std::string over_path = sibling_path(out_path, ".overshoot.csv");
    std::ofstream over_out(over_path);
    if (!over_out) throw mmrisk::SchemaError("cannot open output file '" + over_path + "'");
    write_manifest(over_out, man);
    over_out << "z";
    const char* kind_name[3] = {"excess", "undershoot", "jump_through"};
    for (const char* kn : kind_name)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                over_out << "," << kn << "_" << (i + 1) << "_" << (j + 1);
    over_out << "\n";
    const mmrisk::OvershootKind kinds[3] = {mmrisk::OvershootKind::gamma_plus,
                                            mmrisk::OvershootKind::gamma_under,
                                            mmrisk::OvershootKind::gamma_total};
    for (double z : z_grid.points) {
        over_out << fmt(z);
        for (auto kind : kinds) {
            Matrix t = analysis.tail(kind, z);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) over_out << "," << fmt(t(i, j));
        }
        over_out << "\n";
    }

    nlohmann::ordered_json side;
    side["tool"] = std::string("mmrisk ") + mmrisk::version_string;
    side["model"] = man.model_path;
    side["states"] = m;
    side["drift"] = model.drift();
    auto vec_to_json = [](const Vector& v) {
        std::vector<double> out(static_cast<std::size_t>(v.size()));
        for (Eigen::Index k = 0; k < v.size(); ++k) out[static_cast<std::size_t>(k)] = v(k);
        return out;
    };
    auto mat_to_json = [](const Matrix& a) {
        std::vector<std::vector<double>> out;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            std::vector<double> row;
            for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
            out.push_back(row);
        }
        return out;
    };
    side["lundberg"]["gamma"] = cert.gamma;
    side["lundberg"]["h"] = vec_to_json(cert.h);
    side["lundberg"]["nu"] = vec_to_json(cert.nu);
    side["lundberg"]["c_minus"] = cert.c_minus;
    side["lundberg"]["c_plus"] = cert.c_plus;
    side["factorization"]["denominator"] = fact.G.den;
    {
        std::vector<std::vector<double>> roots;
        for (const auto& p : fact.poles) roots.push_back({p.real(), p.imag()});
        side["factorization"]["denominator_roots"] = roots;
    }
    side["factorization"]["ladder_exit"] = mat_to_json(fact.ladder_exit);
    side["factorization"]["atom_at_zero"] = vec_to_json(fact.infimum.atom_at_zero);
    {
        Vector psi0(m);
        for (int i = 0; i < m; ++i) psi0(i) = mmrisk::ruin_probability(fact.infimum, i, 0.0);
        side["factorization"]["ruin_at_zero"] = vec_to_json(psi0);
    }
    side["ladder"]["total_mass"] = mat_to_json(ladder.total_mass);

    const std::string side_path = sibling_path(out_path, ".sidecar.json");
    std::ofstream side_out(side_path);
    if (!side_out) throw mmrisk::SchemaError("cannot open output file '" + side_path + "'");
    side_out << side.dump(2) << "\n";

    write_manifest(std::cout, man);
    std::cout << "wrote," << out_path << "\n";
    std::cout << "wrote," << over_path << "\n";
    std::cout << "wrote," << side_path << "\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

int run_simulate(const Manifest& man, const std::string& model_path, double u,
                 std::uint64_t paths, std::uint64_t seed, double t_max,
                 std::optional<double> level_x, int from_state,
                 const std::string& dump_path, const std::string& out_path) {
    auto model = load_model(model_path);
    const int m = model.states();
    if (from_state < 1 || from_state > m)
        throw mmrisk::SchemaError("--from: state out of range 1.." + std::to_string(m));

    OutFile out(out_path);
    std::ostream& os = out.stream();
    write_manifest(os, man);
    os << "quantity,point,std_err,n,seed,truncated_fraction\n";

    mmrisk::SimConfig cfg;
    cfg.n_paths = paths;
    cfg.t_max = t_max;

    std::uint64_t row = 0;
    for (int i = 0; i < m; ++i, ++row) {
        cfg.seed = seed + row;
        auto est = mmrisk::estimate_ruin(model, i, u, cfg);
        os << "ruin_state_" << (i + 1) << "," << fmt(est.point) << "," << fmt(est.std_err)
           << "," << est.n << "," << est.seed << "," << fmt(est.truncated_fraction) << "\n";
    }

    if (level_x) {
        cfg.seed = seed + row;
        mmrisk::OvershootStudy study(model, from_state - 1, *level_x, paths, cfg);
        auto est = study.crossing_probability();
        os << "crossing_state_" << from_state << "," << fmt(est.point) << ","
           << fmt(est.std_err) << "," << est.n << "," << cfg.seed << ","
           << fmt(study.truncated_fraction()) << "\n";
        if (!dump_path.empty()) {
            std::ofstream dump(dump_path);
            if (!dump) throw mmrisk::SchemaError("cannot open output file '" + dump_path + "'");
            write_manifest(dump, man);
            dump << "rep,tau,gamma_plus,gamma_under,gamma_total,state_at_tau\n";
            for (const auto& s : study.samples()) {
                dump << s.rep << "," << fmt(s.tau) << "," << fmt(s.gamma_plus) << ","
                     << fmt(s.gamma_under) << "," << fmt(s.gamma_total) << ","
                     << (s.state_at_tau + 1) << "\n";
            }
        }
    } else if (!dump_path.empty()) {
        throw mmrisk::SchemaError("--dump requires --level-x");
    }
    return 0;
}

// ----------------------------------------------------------------- compare

int run_compare(const Manifest& man, const std::string& model_path,
                std::uint64_t paths, std::uint64_t seed, double t_max,
                const std::string& out_path) {
    auto model = load_model(model_path);

    double tamper = 0.0;
    if (const char* env = std::getenv("MMRISK_COMPARE_TAMPER")) tamper = std::atof(env);

    auto report = mmrisk::compare_analytics_vs_mc(model, paths, seed, t_max, tamper);

    OutFile out(out_path);
    std::ostream& os = out.stream();
    write_manifest(os, man);
    os << "check,analytic,mc,std_err,z,pass\n";
    for (const auto& c : report.checks) {
        os << c.name << "," << fmt(c.analytic) << "," << fmt(c.mc) << "," << fmt(c.se)
           << "," << fmt(c.z) << "," << (c.pass ? 1 : 0) << "\n";
    }
    os << "max_abs_z," << fmt(report.max_abs_z) << ",,,,\n";
    os << "truncated_fraction_max," << fmt(report.truncated_fraction_max) << ",,,,\n";
    os << "overall," << (report.pass ? "PASS" : "FAIL") << ",,,,\n";
    return report.pass ? 0 : 5;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ruin probabilities, exponential bounds and level-crossing laws\n"
                 "for Markov-modulated two-sided jump processes"};
    app.set_version_flag("--version", std::string(mmrisk::version_string));
    app.require_subcommand(1);

    std::string model_path, out_path, dump_path;
    std::string u_grid_text, z_grid_text = "0:3:0.25";
    double u = 1.0, t_max = 500.0;
    std::uint64_t paths = 100000, seed = 1;
    double level_x_value = 0.0;
    int from_state = 1;

    auto* validate = app.add_subcommand("validate", "Check a model file and report its summary");
    validate->add_option("model", model_path, "model JSON file")->required();

    auto* analyze = app.add_subcommand(
        "analyze", "Run the analytic pipeline onto CSV grids plus a JSON sidecar");
    analyze->add_option("model", model_path, "model JSON file")->required();
    analyze->add_option("--u-grid", u_grid_text, "ruin levels as a:b:step")->required();
    analyze->add_option("--z-grid", z_grid_text, "overshoot arguments as a:b:step (default 0:3:0.25)");
    analyze->add_option("--out", out_path, "main CSV path; .overshoot.csv and .sidecar.json siblings")
        ->required();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates of the same quantities");
    simulate->add_option("model", model_path, "model JSON file")->required();
    simulate->add_option("--u", u, "ruin level")->required();
    simulate->add_option("--paths", paths, "replications per estimate");
    simulate->add_option("--seed", seed, "base seed");
    simulate->add_option("--t-max", t_max, "horizon per path");
    auto* level_opt = simulate->add_option("--level-x", level_x_value,
                                           "also study the overshoot of this level");
    simulate->add_option("--from", from_state, "start state for the overshoot study (1-based)");
    simulate->add_option("--dump", dump_path, "write raw overshoot samples to this CSV");
    simulate->add_option("--out", out_path, "write results here instead of stdout");

    auto* compare = app.add_subcommand("compare",
                                       "Cross-validate analytic values against simulation");
    compare->add_option("model", model_path, "model JSON file")->required();
    compare->add_option("--paths", paths, "replications per estimate");
    compare->add_option("--seed", seed, "base seed");
    compare->add_option("--t-max", t_max, "horizon per path");
    compare->add_option("--out", out_path, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Manifest man;
    man.command = join_args(argc, argv);
    man.model_path = model_path;

    try {
        if (app.got_subcommand(validate)) {
            man.parameters = "-";
            return run_validate(man, model_path);
        }
        if (app.got_subcommand(analyze)) {
            man.parameters = "u_grid=" + u_grid_text + " z_grid=" + z_grid_text;
            return run_analyze(man, model_path, u_grid_text, z_grid_text, out_path);
        }
        if (app.got_subcommand(simulate)) {
            std::ostringstream p;
            p << "u=" << fmt(u) << " paths=" << paths << " t_max=" << fmt(t_max);
            if (level_opt->count()) p << " level_x=" << fmt(level_x_value) << " from=" << from_state;
            man.parameters = p.str();
            man.seed = std::to_string(seed);
            std::optional<double> level_x;
            if (level_opt->count()) level_x = level_x_value;
            return run_simulate(man, model_path, u, paths, seed, t_max, level_x, from_state,
                                dump_path, out_path);
        }
        std::ostringstream p;
        p << "paths=" << paths << " t_max=" << fmt(t_max);
        man.parameters = p.str();
        man.seed = std::to_string(seed);
        return run_compare(man, model_path, paths, seed, t_max, out_path);
    } catch (const mmrisk::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mmrisk::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mmrisk::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
