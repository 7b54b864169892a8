// tvprox command line: 1D/2D/ND TV prox, FLSA, fused lasso, denoising,
// ISNR and the benchmark harness.
//
// Exit codes: 0 success, 1 bad arguments, 2 solver did not converge,
// 3 I/O or file format error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tvprox/tvprox.hpp"

using namespace tvprox;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitIo = 3;

struct Common {
    double tol = SolverOptions{}.gap_tol;
    double stop_tol = SolverOptions{}.stop_tol;
    std::size_t max_iter = SolverOptions{}.max_iter;
    std::size_t workers = 1;
    std::string output;

    SolverOptions options() const {
        SolverOptions o;
        o.gap_tol = tol;
        o.stop_tol = stop_tol;
        o.max_iter = max_iter;
        o.workers = workers;
        o.validate();
        return o;
    }
};

void add_common(CLI::App* cmd, Common& c, bool tensor) {
    cmd->add_option("--tol", c.tol, "Duality-gap tolerance of the 1D solves")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", c.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--output,-o", c.output, "Result file (stdout if omitted)");
    if (tensor) {
        cmd->add_option("--stop-tol", c.stop_tol, "Combiner stopping tolerance")->check(CLI::PositiveNumber);
        cmd->add_option("--workers", c.workers, "Threads for the fiber solves")->check(CLI::PositiveNumber);
    }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json report_json(const SolverReport& r) {
    return {{"solver", r.solver},
            {"iterations", r.iterations},
            {"inner_steps", r.inner_steps},
            {"duality_gap", number_or_null(r.duality_gap)},
            {"objective", number_or_null(r.objective)},
            {"converged", r.converged},
            {"wall_ns", r.wall_time.count()}};
}

bool ends_with(const std::string& s, const std::string& ext) {
    if (s.size() < ext.size()) return false;
    std::string tail = s.substr(s.size() - ext.size());
    for (char& ch : tail) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return tail == ext;
}

void write_vector(const std::string& path, std::span<const double> v) {
    if (path.empty()) {
        std::cout.precision(17);
        for (double a : v) std::cout << a << '\n';
        return;
    }
    write_csv_column(path, v);
}

void write_tensor(const std::string& path, const TensorND& t) {
    if (ends_with(path, ".pgm")) return write_pgm(path, t);
    if (ends_with(path, ".tvt")) return write_tvt(path, t);
    if (path.empty() && t.ndim() != 1) throw IoError("an --output file is needed for a tensor with dims " +
                                                     dims_string(t.dims()));
    if (t.ndim() != 1) throw IoError("use a .pgm or .tvt output for a tensor with dims " + dims_string(t.dims()));
    write_vector(path, t.data());
}

/// Report goes to stdout when the result went to a file, stderr otherwise.
int finish(const SolverReport& rep, const std::string& output, json extra = json::object()) {
    json j = report_json(rep);
    j.update(extra);
    (output.empty() ? std::cerr : std::cout) << j.dump() << '\n';
    return rep.converged ? 0 : kExitNoConvergence;
}

/// "k=lambda:p,..." with every axis of an n-axis tensor given at most once;
/// axes left out get no penalty.
AxisSpec parse_axis_spec(const std::string& text, std::size_t ndim) {
    AxisSpec spec;
    spec.axes.assign(ndim, AxisPenalty{});
    std::vector<bool> seen(ndim, false);
    std::stringstream ss(text);
    std::string item;
    auto bad = [&](const std::string& why) {
        return std::invalid_argument("--spec entry '" + item + "': " + why);
    };
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw bad("expected k=lambda[:p]");
        std::size_t k;
        double lambda, p = 1;
        try {
            std::size_t used = 0;
            k = std::stoul(item.substr(0, eq), &used);
            if (used != eq) throw bad("axis is not an integer");
            const std::string rest = item.substr(eq + 1);
            const auto colon = rest.find(':');
            lambda = std::stod(rest.substr(0, colon));
            if (colon != std::string::npos) {
                const std::string ps = rest.substr(colon + 1);
                p = ps == "inf" ? kInfNorm : std::stod(ps);
            }
        } catch (const std::invalid_argument&) {
            throw bad("expected k=lambda[:p]");
        } catch (const std::out_of_range&) {
            throw bad("number out of range");
        }
        if (k >= ndim) throw bad("axis out of range for " + std::to_string(ndim) + " axes");
        if (seen[k]) throw bad("axis given twice");
        seen[k] = true;
        spec.axes[k] = AxisPenalty{lambda, p, {}};
    }
    return spec;
}

double parse_p(const std::string& s) {
    if (s == "inf") return kInfNorm;
    std::size_t used = 0;
    double p;
    try {
        p = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad norm '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("bad norm '" + s + "'");
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Total-variation proximity operators"};
    app.require_subcommand(1);
    std::function<int()> run;

    // prox1d
    Common c1;
    std::string in1, weights1, solver1 = "auto", p1 = "1";
    std::optional<double> lambda1;
    auto* prox1d = app.add_subcommand("prox1d", "1D TV prox of a CSV signal");
    prox1d->add_option("--input,-i", in1, "Signal, one value per line")->required();
    auto* lam_opt = prox1d->add_option("--lambda", lambda1, "Uniform penalty");
    auto* w_opt = prox1d->add_option("--weights", weights1, "Per-edge penalties, n-1 lines (p = 1 only)");
    lam_opt->excludes(w_opt);
    prox1d->add_option("--p", p1, "Norm on the differences (>= 1 or inf)");
    prox1d->add_option("--solver", solver1, "auto, classic, linearized, hybrid, pn, msn, gp, fw, gp-fw");
    add_common(prox1d, c1, false);
    prox1d->callback([&] {
        run = [&] {
            if (!lambda1 && weights1.empty()) throw std::invalid_argument("prox1d needs --lambda or --weights");
            const Signal y(read_csv_column(in1));
            const WeightVector w =
                lambda1 ? WeightVector::uniform(*lambda1) : WeightVector::per_edge(read_csv_column(weights1));
            const ProxResult r = prox_tv1d(y, w, parse_p(p1), parse_tv1d_solver(solver1), c1.options());
            write_vector(c1.output, r.x.values());
            return finish(r.report, c1.output);
        };
    });

    // prox2d
    Common c2;
    std::string in2, p2 = "1", q2 = "1", comb2 = "dr";
    double lrows = 0, lcols = 0;
    auto* prox2d = app.add_subcommand("prox2d", "2D TV prox of an image (PGM) or matrix (TVT)");
    prox2d->add_option("--input,-i", in2, "PGM or 2D TVT file")->required();
    prox2d->add_option("--lambda-rows", lrows, "Penalty along each row")->required();
    prox2d->add_option("--lambda-cols", lcols, "Penalty along each column")->required();
    prox2d->add_option("--p", p2, "Norm along rows");
    prox2d->add_option("--q", q2, "Norm along columns");
    prox2d->add_option("--combiner", comb2, "dr, pd, ppd or admm");
    add_common(prox2d, c2, true);
    prox2d->callback([&] {
        run = [&] {
            const TensorND y = read_tensor_any(in2);
            if (y.ndim() != 2) throw IoError("'" + in2 + "' is not 2D (dims " + dims_string(y.dims()) + ")");
            const TensorResult r = prox_tv2d(y, {lrows, parse_p(p2), {}}, {lcols, parse_p(q2), {}},
                                             parse_combiner(comb2), c2.options());
            write_tensor(c2.output, r.x);
            return finish(r.report, c2.output);
        };
    });

    // proxnd
    Common c3;
    std::string in3, spec3, comb3 = "ppd";
    auto* proxnd = app.add_subcommand("proxnd", "N-D TV prox of a TVT tensor");
    proxnd->add_option("--input,-i", in3, "TVT file")->required();
    proxnd->add_option("--spec", spec3, "Per-axis penalties: k=lambda[:p],...")->required();
    proxnd->add_option("--combiner", comb3, "ppd or admm (dr, pd with two active axes)");
    add_common(proxnd, c3, true);
    proxnd->callback([&] {
        run = [&] {
            const TensorND y = read_tensor_any(in3);
            const TensorResult r = prox_tvnd(y, parse_axis_spec(spec3, y.ndim()), parse_combiner(comb3),
                                             c3.options());
            write_tensor(c3.output, r.x);
            return finish(r.report, c3.output);
        };
    });

    // flsa
    Common c4;
    std::string in4;
    double l1_4 = 0, l2_4 = 0;
    auto* flsa = app.add_subcommand("flsa", "Fused lasso signal approximator (1D CSV or 2D image)");
    flsa->add_option("--input,-i", in4, "CSV signal, PGM or 2D TVT")->required();
    flsa->add_option("--l1", l1_4, "Sparsity penalty")->required();
    flsa->add_option("--l2", l2_4, "TV penalty")->required();
    add_common(flsa, c4, true);
    flsa->callback([&] {
        run = [&] {
            const TensorND y = read_tensor_any(in4);
            if (y.ndim() == 1) {
                const ProxResult r = flsa_1d(Signal(y.data()), l1_4, l2_4, c4.options());
                write_vector(c4.output, r.x.values());
                return finish(r.report, c4.output);
            }
            if (y.ndim() != 2) throw IoError("flsa takes 1D or 2D input, got dims " + dims_string(y.dims()));
            const TensorResult r = flsa_2d(y, l1_4, l2_4, Combiner::dr, c4.options());
            write_tensor(c4.output, r.x);
            return finish(r.report, c4.output);
        };
    });

    // fusedlasso
    Common c5;
    std::string design5, response5, loss5 = "ls", p5 = "1";
    double l1_5 = 0, l2_5 = 0;
    bool intercept5 = false;
    auto* fl = app.add_subcommand("fusedlasso", "Fused lasso regression / classification");
    fl->add_option("--design", design5, "Design matrix, comma-separated rows")->required();
    fl->add_option("--response", response5, "Responses, one per line (+1/-1 for logistic)")->required();
    fl->add_option("--l1", l1_5, "Sparsity penalty")->required();
    fl->add_option("--l2", l2_5, "TV penalty")->required();
    fl->add_option("--loss", loss5, "ls or logistic");
    fl->add_option("--p", p5, "Norm on the differences");
    fl->add_flag("--intercept", intercept5, "Fit an unpenalized intercept");
    add_common(fl, c5, false);
    fl->callback([&] {
        run = [&] {
            FusedLassoProblem prob;
            prob.A = read_csv_matrix(design5);
            prob.y = read_csv_column(response5);
            prob.l1 = l1_5;
            prob.l2 = l2_5;
            prob.loss = parse_loss(loss5);
            prob.p = parse_p(p5);
            prob.intercept = intercept5;
            FusedLassoOptions o;
            o.max_iter = c5.max_iter;
            o.prox.gap_tol = c5.tol;
            const FusedLassoResult r = solve_fused_lasso(prob, o);
            write_vector(c5.output, r.x.values());
            return finish(r.report, c5.output, {{"intercept", r.intercept}});
        };
    });

    // denoise
    Common c6;
    std::string in6, spec6, comb6, original6;
    std::optional<double> lambda6;
    auto* den = app.add_subcommand("denoise", "Anisotropic TV denoising of an image or volume");
    den->add_option("--input,-i", in6, "PGM or TVT file")->required();
    auto* l6 = den->add_option("--lambda", lambda6, "TV-L1 penalty on every axis");
    auto* s6 = den->add_option("--spec", spec6, "Per-axis penalties: k=lambda[:p],...");
    l6->excludes(s6);
    den->add_option("--combiner", comb6, "Default: dr for images, ppd otherwise");
    den->add_option("--original", original6, "Clean reference; adds ISNR to the report");
    add_common(den, c6, true);
    den->callback([&] {
        run = [&] {
            if (!lambda6 && spec6.empty()) throw std::invalid_argument("denoise needs --lambda or --spec");
            const TensorND y = read_tensor_any(in6);
            AxisSpec spec;
            if (lambda6)
                spec.axes.assign(y.ndim(), AxisPenalty{*lambda6, 1, {}});
            else
                spec = parse_axis_spec(spec6, y.ndim());
            std::optional<Combiner> comb;
            if (!comb6.empty()) comb = parse_combiner(comb6);
            const TensorResult r = denoise(y, spec, comb, c6.options());
            write_tensor(c6.output, r.x);
            json extra = json::object();
            if (!original6.empty()) {
                const TensorND ref = read_tensor_any(original6);
                if (ref.dims() != y.dims()) throw IoError("'" + original6 + "' has different dims");
                extra["isnr_db"] = number_or_null(isnr(ref.data(), y.data(), r.x.data()));
            }
            return finish(r.report, c6.output, extra);
        };
    });

    // isnr
    std::string orig7, noisy7, rest7;
    auto* isnr_cmd = app.add_subcommand("isnr", "Improvement in SNR of a restoration, in dB");
    isnr_cmd->add_option("--original", orig7, "Clean reference")->required();
    isnr_cmd->add_option("--noisy", noisy7, "Degraded input")->required();
    isnr_cmd->add_option("--restored", rest7, "Restoration")->required();
    isnr_cmd->callback([&] {
        run = [&] {
            const TensorND a = read_tensor_any(orig7), b = read_tensor_any(noisy7), c = read_tensor_any(rest7);
            if (a.dims() != b.dims() || a.dims() != c.dims()) throw IoError("isnr inputs have different dims");
            std::cout.precision(17);
            std::cout << isnr(a.data(), b.data(), c.data()) << '\n';
            return 0;
        };
    });

    // worstcase
    std::size_t n8 = 1024;
    double lambda8 = 1;
    std::string out8;
    auto* wc = app.add_subcommand("worstcase", "Emit the adversarial signal for the linearized taut string");
    wc->add_option("--n", n8, "Length (>= 4)");
    wc->add_option("--lambda", lambda8, "Penalty the signal is built for");
    wc->add_option("--output,-o", out8, "CSV file (stdout if omitted)");
    wc->callback([&] {
        run = [&] {
            write_vector(out8, worst_case_signal(n8, lambda8).values());
            return 0;
        };
    });

    // bench
    std::string scen9 = "size", emit9, p9 = "1";
    std::vector<std::string> solvers9;
    BenchOptions bo;
    auto* bench = app.add_subcommand("bench", "Time 1D solvers over a scenario grid");
    bench->add_option("--scenario", scen9, "size, penalty or worstcase");
    bench->add_option("--solver", solvers9, "Solver to run (repeatable); default classic, linearized, hybrid");
    bench->add_option("--p", p9, "Norm on the differences");
    bench->add_option("--max-n", bo.max_n, "Largest signal length")->check(CLI::PositiveNumber);
    bench->add_option("--repeats", bo.repeats, "Timed runs per cell (median reported)")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bo.seed, "Random seed");
    bench->add_option("--emit", emit9, "JSON report file (stdout if omitted)");
    bench->callback([&] {
        run = [&] {
            if (solvers9.empty()) solvers9 = {"classic", "linearized", "hybrid"};
            bo.p = parse_p(p9);
            const BenchReport rep = run_bench(parse_bench_scenario(scen9), solvers9, bo);
            json cells = json::array();
            bool all_ok = true;
            for (const auto& cell : rep.cells) {
                json j{{"solver", cell.solver},
                       {"n", cell.n},
                       {"lambda", cell.lambda},
                       {"wall_ns", cell.wall_ns},
                       {"inner_steps", cell.inner_steps},
                       {"gap", number_or_null(cell.gap)},
                       {"converged", cell.converged}};
                if (!cell.error.empty()) j["error"] = cell.error;
                all_ok = all_ok && cell.converged;
                cells.push_back(std::move(j));
            }
            const json doc{{"scenario", to_string(rep.scenario)},
                           {"p", number_or_null(bo.p)},
                           {"grid", rep.grid},
                           {"solver", rep.solvers},
                           {"cells", std::move(cells)}};
            if (emit9.empty()) {
                std::cout << doc.dump(2) << '\n';
            } else {
                std::ofstream out(emit9);
                if (!out) throw IoError("cannot write '" + emit9 + "'");
                out << doc.dump(2) << '\n';
                if (!out) throw IoError("write to '" + emit9 + "' failed");
            }
            return all_ok ? 0 : kExitNoConvergence;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        return run();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
