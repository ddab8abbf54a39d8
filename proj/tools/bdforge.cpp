#include "bdforge/reports.hpp"
#include "bdforge/svg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef BDFORGE_VERSION
#define BDFORGE_VERSION "0.0.0"
#endif

using namespace bdforge;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything needed to reproduce a run; wall time lives only in the manifest file.
struct Run {
    std::string subcommand;
    Json params = Json::object();
    std::optional<unsigned long long> seed;
    std::vector<std::string> outputs;
    std::string manifest_path;
    Json violations = Json::array();

    std::string run_id() const
    {
        std::string key = subcommand + "\n" + dump_json(params) + BDFORGE_VERSION;
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : key) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    Json reference() const { return Json{{"manifest", manifest_path}, {"run_id", run_id()}}; }

    void output(const std::string& path, const std::string& text)
    {
        try {
            write_file(path, text);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        outputs.push_back(path);
    }

    void violation(const std::string& what, Json detail = Json::object())
    {
        detail["what"] = what;
        violations.push_back(std::move(detail));
    }
};

std::size_t cell_cap()
{
    const char* env = std::getenv("BDFORGE_CELL_CAP");
    if (!env || !*env)
        return 200000;
    try {
        std::size_t pos = 0;
        long long v = std::stoll(env, &pos);
        if (pos != std::string(env).size() || v < 1)
            throw std::invalid_argument("bad");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw UsageError(std::string("BDFORGE_CELL_CAP must be a positive integer, got '") + env + "'");
    }
}

Rat rat_arg(const std::string& s, const char* flag)
{
    try {
        return parse_rat(s);
    } catch (const std::exception& e) {
        throw UsageError(std::string(flag) + ": " + e.what());
    }
}

// Decimal or p/q.
double real_arg(const std::string& s, const char* flag)
{
    if (s.find('/') != std::string::npos)
        return rat_arg(s, flag).get_d();
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
        throw UsageError(std::string(flag) + ": not a number: '" + s + "'");
    return v;
}

std::vector<Rat> rat_list(const std::string& s, std::size_t n, const char* flag)
{
    std::vector<Rat> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(rat_arg(item, flag));
    if (out.size() != n)
        throw UsageError(std::string(flag) + ": expected " + std::to_string(n) + " comma-separated rationals");
    return out;
}

Json load_json(const std::string& path)
{
    try {
        return parse_json_text(read_file(path));
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

Json field_json(const PAField& f, const Run& run)
{
    Json j = to_json(f);
    j["run"] = run.reference();
    return j;
}

Json field_json(const PPField& f, const Run& run)
{
    Json j = to_json(f);
    j["run"] = run.reference();
    return j;
}

// ---- subcommands -------------------------------------------------------------------------

struct PureJumpArgs {
    std::string M = "1", omega0, out, trace;
};

Json cmd_pure_jump(const PureJumpArgs& a, Run& run)
{
    PureJumpConfig cfg;
    cfg.M = rat_arg(a.M, "--M");
    if (cfg.M < 1)
        throw UsageError("--M must be at least 1");
    if (!a.omega0.empty()) {
        auto v = rat_list(a.omega0, 4, "--omega0");
        cfg.iteration.omega0 = Rect(v[0], v[1], v[2], v[3]);
        if (!cfg.iteration.omega0.valid() || !cfg.iteration.domain.contains(cfg.iteration.omega0))
            throw UsageError("--omega0 must be a nondegenerate rectangle inside [0,1]^2");
    }
    cfg.iteration.cell_cap = cell_cap();
    run.params = Json{{"M", to_string(cfg.M)}, {"omega0", rect_json(cfg.iteration.omega0)}, {"cell_cap", cfg.iteration.cell_cap}};
    PureJumpResult r = build_pure_jump(cfg);
    if (!a.out.empty())
        run.output(a.out, dump_json(field_json(r.w, run)));
    if (!a.trace.empty())
        run.output(a.trace, r.trace.csv());
    Rat invM = 1 / cfg.M;
    if (!r.target_met)
        run.violation("gradient target not reached", Json{{"status", r.status}});
    if (r.report.eu_total.hi() > invM.get_d())
        run.violation("|Ew| exceeds 1/M", Json{{"eu_total", r.report.eu_total.value}});
    if (r.report.bulk_grad_l1.lo() < cfg.M.get_d())
        run.violation("int |grad w| below M", Json{{"grad", r.report.bulk_grad_l1.value}});
    if (!r.strain_zero)
        run.violation("e(w) is not identically zero");
    if (!r.frame_zero)
        run.violation("w does not vanish on the boundary frame");
    Json j = to_json(r);
    j["trace"] = to_json(r.trace);
    return j;
}

Json cmd_assemble(int K, const std::string& out, Run& run)
{
    if (K < 1)
        throw UsageError("--K must be at least 1");
    PureJumpConfig base;
    base.iteration.cell_cap = cell_cap();
    run.params = Json{{"K", K}, {"cell_cap", base.iteration.cell_cap}};
    AssemblyResult r = assemble_pure_jump(K, base);
    if (!out.empty())
        run.output(out, dump_json(field_json(r.u, run)));
    if (!r.eu_ok)
        run.violation("sum of |Eu|(Q_k) exceeds 2", Json{{"eu_total", r.eu_total.value}});
    if (!r.grad_ok)
        run.violation("sum of int |grad u| below the geometric target",
                      Json{{"grad_total", r.grad_total.value}, {"target", r.grad_target}});
    if (!r.strain_zero)
        run.violation("e(u) is not identically zero");
    return to_json(r);
}

struct CantorArgs {
    int kstar = 3, level = 4;
    std::string gamma, out;
};

Json cmd_pure_cantor(const CantorArgs& a, Run& run)
{
    CantorPipelineConfig cfg;
    cfg.kstar = a.kstar;
    cfg.m = a.level;
    if (cfg.kstar < 1 || cfg.m < 1)
        throw UsageError("--kstar and --level must be at least 1");
    if (!a.gamma.empty()) {
        cfg.gamma = rat_arg(a.gamma, "--gamma");
        if (!(*cfg.gamma > 0))
            throw UsageError("--gamma must be positive");
    }
    cfg.cell_cap = cell_cap();
    run.params = Json{{"kstar", cfg.kstar}, {"level", cfg.m}, {"gamma", a.gamma.empty() ? Json() : Json(to_string(*cfg.gamma))},
                      {"cell_cap", cfg.cell_cap}};
    CantorPipelineResult r = build_pure_cantor(cfg);
    if (!a.out.empty())
        run.output(a.out, dump_json(field_json(displacement(r.w), run)));
    const auto& rep = r.report;
    if (!rep.continuous)
        run.violation("w has jumps", Json{{"jump_length", to_string(rep.jump_length)}});
    if (!rep.boundary_trace_exact)
        run.violation("boundary trace differs from u0");
    for (const auto& s : rep.steps) {
        if (!s.grad_lower_ok)
            run.violation("gradient lower bound fails", Json{{"k", s.k}});
        if (cfg.gamma && !s.sigma_ok)
            run.violation("sup drift exceeds its budget", Json{{"k", s.k}, {"sigma", s.sigma.value}, {"budget", s.sigma_budget}});
    }
    return to_json(rep);
}

Json cmd_measure(const std::string& in, const std::string& csv, Run& run)
{
    Json doc = load_json(in);
    run.params = Json{{"input", in}};
    StrainReport rep;
    try {
        std::string kind = field_kind(doc);
        if (kind == "PAField")
            rep = strain_report(pa_from_json(doc));
        else if (kind == "PPField")
            rep = strain_report(pp_from_json(doc));
        else
            throw FormatError("unknown field kind " + kind);
    } catch (const FieldError& e) {
        throw UsageError(e.what());
    }
    if (!csv.empty())
        run.output(csv, strain_csv_header() + "\n" + strain_csv_row(rep) + "\n");
    if (rep.jump_eu.lo() > rep.jump_du.hi())
        run.violation("jump strain exceeds the jump variation");
    if (rep.bulk_strain_l1.lo() > rep.bulk_grad_l1.hi())
        run.violation("bulk strain exceeds the bulk gradient");
    return to_json(rep);
}

struct QuantizeArgs {
    std::string mode, delta, in, out;
    int level = 1;
};

Json cmd_quantize(const QuantizeArgs& a, Run& run)
{
    if (a.mode != "stair" && a.mode != "cantor")
        throw UsageError("--mode must be stair or cantor");
    Rat delta = rat_arg(a.delta, "--delta");
    if (a.level < 1)
        throw UsageError("--level must be at least 1");
    Json doc = load_json(a.in);
    run.params = Json{{"mode", a.mode}, {"delta", to_string(delta)}, {"level", a.level}, {"input", a.in}};
    PAField u;
    try {
        u = pa_from_json(doc);
    } catch (const FieldError& e) {
        throw UsageError(e.what());
    }
    std::size_t cap = cell_cap();
    PAField v{u.domain, {}};
    try {
        for (const auto& c : u.cells) {
            PAField q = a.mode == "stair" ? staircase_quantize(c.f, c.r, delta) : cantor_quantize_full(c.f, c.r, delta, a.level, cap).field;
            for (auto& qc : q.cells)
                v.cells.push_back(std::move(qc));
            if (v.cells.size() > cap)
                throw QuantizeError("quantize: cell cap " + std::to_string(cap) + " exceeded");
        }
    } catch (const QuantizeError& e) {
        throw UsageError(e.what());
    }
    sort_cells(v.cells);
    StrainReport before = strain_report(u), after = strain_report(v);
    NormIntegral dist = sup_distance(u, v);
    Json j;
    j["cells"] = v.cells.size();
    j["sup_distance"] = to_json(dist);
    j["du_before"] = to_json(before.du_total);
    j["du_after"] = to_json(after.du_total);
    j["bulk_grad_after"] = to_json(after.bulk_grad_l1);
    j["jump_length_after"] = to_string(after.jump_length);
    if (a.mode == "stair" && after.bulk_grad_l1.value != 0)
        run.violation("staircase output has a nonzero gradient");
    if (a.mode == "cantor" && after.jump_length != 0)
        run.violation("Cantor output has jumps");
    if (!a.out.empty())
        run.output(a.out, dump_json(field_json(v, run)));
    else
        j["field"] = to_json(v);
    return j;
}

std::string cmd_balls(int n, int K, double q, Run& run)
{
    if (n < 2 || K < 1 || !(q >= 1))
        throw UsageError("balls: need --n >= 2, --K >= 1, --q >= 1");
    run.params = Json{{"n", n}, {"K", K}, {"q", q}};
    BallsReport rep = balls_partial({n, K}, q);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (rep.rows[i].grad_l1 > rep.basel_bound)
            run.violation("grad-L1 partial sum exceeds the Basel bound", Json{{"k", rep.rows[i].k}});
        if (i > 0 && rep.rows[i].du - rep.rows[i - 1].du > rep.du_increment_const / (double(rep.rows[i].k) * rep.rows[i].k) * (1 + 1e-12))
            run.violation("|Du| increment exceeds c/k^2", Json{{"k", rep.rows[i].k}});
    }
    return rep.csv();
}

struct CacArgs {
    unsigned long long seed = 0;
    int pieces = 50, trials = 1;
    std::string mode = "rigid";
};

std::string cmd_caccioppoli(const CacArgs& a, Run& run, Json& summary)
{
    if (a.mode != "rigid" && a.mode != "affine")
        throw UsageError("--mode must be rigid or affine");
    if (a.pieces < 1 || a.trials < 1)
        throw UsageError("--pieces and --trials must be positive");
    CacMode mode = a.mode == "rigid" ? CacMode::Rigid : CacMode::Affine;
    run.seed = a.seed;
    run.params = Json{{"seed", a.seed}, {"pieces", a.pieces}, {"mode", a.mode}, {"trials", a.trials}};
    std::string csv = "seed,pieces,mode,violations,grad_1,du_1,boundary_1,grad_2,du_2,boundary_2\n";
    std::size_t total = 0;
    for (int t = 0; t < a.trials; ++t) {
        unsigned long long seed = a.seed + static_cast<unsigned long long>(t);
        GsbvReport r = gsbv_check(random_caccioppoli(seed, a.pieces, mode));
        total += r.violations.size();
        for (const auto& v : r.violations)
            run.violation(v.what, Json{{"seed", seed}, {"piece", v.piece}, {"component", v.component}});
        csv += std::to_string(seed) + "," + std::to_string(a.pieces) + "," + a.mode + "," + std::to_string(r.violations.size());
        for (int i = 0; i < 2; ++i)
            csv += "," + fmt17(r.grad[i].value) + "," + fmt17(r.du_total[i].value) + "," + fmt17(r.boundary_rhs[i].get_d());
        csv += "\n";
        if (t == 0)
            summary = to_json(r);
    }
    summary["total_violations"] = total;
    return csv;
}

struct DensityArgs {
    std::string probe = "const", x;
    int K = 32;
    std::string p = "4";
};

std::string cmd_density(const DensityArgs& a, Run& run)
{
    DensityProbe probe;
    if (a.probe == "const")
        probe.kind = ProbeKind::Constant;
    else if (a.probe == "bump")
        probe.kind = ProbeKind::Bump;
    else if (a.probe == "remark")
        probe.kind = ProbeKind::Remark;
    else
        throw UsageError("--probe must be const, bump or remark");
    if (a.K < 1)
        throw UsageError("--K must be positive");
    double p = real_arg(a.p, "--p");
    if (!(p > 1))
        throw UsageError("--p must exceed 1");
    probe.K = a.K;
    probe.p = p;
    if (!a.x.empty()) {
        auto v = rat_list(a.x, 2, "--x");
        probe.x = {v[0].get_d(), v[1].get_d()};
    }
    run.params = Json{{"probe", a.probe}, {"K", a.K}, {"x", Json::array({probe.x.x, probe.x.y})}, {"p", p}};
    DensityResult r = density_partial_sums(probe);
    for (const auto& f : r.failures)
        run.violation("quadrature tolerance not met", Json{{"k", f.k}, {"err", f.err}});
    for (std::size_t i = 1; i < r.partial.size(); ++i)
        if (r.partial[i].hi() < r.partial[i - 1].lo())
            run.violation("partial sums decrease", Json{{"K", i + 1}});
    if (probe.kind == ProbeKind::Bump && p > 2) {
        for (int K = 1; K <= a.K; ++K) {
            TailBound t = lp_tail_bound(r.norm_p->value, p, 2, K);
            double slack = r.partial[K - 1].abs_error_bound + r.norm_p->abs_error_bound * t.partial / r.norm_p->value;
            if (r.partial[K - 1].value > t.partial + slack)
                run.violation("S_K exceeds the L^p tail bound",
                              Json{{"K", K}, {"S_K", r.partial[K - 1].value}, {"bound", t.partial},
                                   {"holder_bound", holder_tail_bound(r.norm_p->value, p, 2, K)}});
        }
    }
    return r.csv();
}

std::string cmd_affine(int trials, unsigned long long seed, Run& run, Json& summary)
{
    if (trials < 1)
        throw UsageError("--trials must be positive");
    run.seed = seed;
    run.params = Json{{"trials", trials}, {"seed", seed}};
    AffineLemmaReport rep = affine_lemma_trials(trials, seed);
    summary = Json{{"trials", rep.rows.size()},    {"rejected", rep.rejected},   {"c_emp", rep.c_emp},
                   {"chain_delta", rep.chain.delta}, {"chain_c", rep.chain.c}, {"max_area_defect", rep.max_area_defect}};
    if (rep.c_emp > rep.chain.c)
        run.violation("empirical constant exceeds the chained constant", summary);
    for (const auto& r : rep.rows)
        if (!r.quad_ok)
            run.violation("quadrature tolerance not met", Json{{"trial", r.trial}});
    return rep.csv();
}

Json cmd_render(const std::string& in, const std::string& svg, int coarsen, std::size_t cap, Run& run)
{
    Json doc = load_json(in);
    run.params = Json{{"input", in}, {"coarsen", coarsen}, {"cap", cap}};
    PAField f;
    try {
        std::string kind = field_kind(doc);
        if (kind == "PPField")
            f = to_pa(pp_from_json(doc));
        else
            f = pa_from_json(doc);
    } catch (const FieldError& e) {
        throw UsageError(e.what());
    }
    RenderOptions opt;
    opt.cap = cap;
    opt.coarsen = coarsen;
    std::string text;
    try {
        text = render_svg(f, opt);
    } catch (const RenderError& e) {
        throw UsageError(e.what());
    }
    run.output(svg, text);
    return Json{{"cells", f.cells.size()}, {"svg", svg}};
}

void write_manifest(const Run& run, double seconds)
{
    if (run.manifest_path.empty())
        return;
    Json m;
    m["subcommand"] = run.subcommand;
    m["params"] = run.params;
    m["seed"] = run.seed ? Json(*run.seed) : Json();
    m["tool_version"] = BDFORGE_VERSION;
    m["run_id"] = run.run_id();
    m["outputs"] = run.outputs;
    m["wall_time_s"] = seconds;
    write_file(run.manifest_path, dump_json(m));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"bdforge: exact piecewise constructions for BD-versus-BV counterexamples"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string manifest;
    app.add_option("--manifest", manifest, "Manifest path (default: <primary output>.manifest.json)");

    PureJumpArgs pj;
    auto* s_pj = app.add_subcommand("pure-jump", "Ornstein iteration, staircase quantization and rescaling");
    s_pj->add_option("--M", pj.M, "Target M >= 1 (rational)")->required();
    s_pj->add_option("--omega0", pj.omega0, "Initial rectangle x0,x1,y0,y1");
    s_pj->add_option("--out", pj.out, "Field JSON");
    s_pj->add_option("--trace", pj.trace, "Iteration trace CSV");

    int asm_K = 1;
    std::string asm_out;
    auto* s_asm = app.add_subcommand("assemble", "Dyadic assembly of pure-jump blocks");
    s_asm->add_option("--K", asm_K, "Number of blocks")->required();
    s_asm->add_option("--out", asm_out, "Field JSON");

    CantorArgs pc;
    auto* s_pc = app.add_subcommand("pure-cantor", "Blended Cantor pipeline");
    s_pc->add_option("--kstar", pc.kstar, "Number of laminate steps")->required();
    s_pc->add_option("--level", pc.level, "Cantor level m")->required();
    s_pc->add_option("--gamma", pc.gamma, "Schedule constant gamma > 0 (rational)");
    s_pc->add_option("--out", pc.out, "Displacement field JSON");

    std::string meas_in, meas_csv;
    auto* s_meas = app.add_subcommand("measure", "Strain and variation report of a field");
    s_meas->add_option("field", meas_in, "Field JSON")->required();
    s_meas->add_option("--csv", meas_csv, "CSV report");

    QuantizeArgs qa;
    auto* s_q = app.add_subcommand("quantize", "Staircase or Cantor quantization of every cell");
    s_q->add_option("--mode", qa.mode, "stair or cantor")->required();
    s_q->add_option("--delta", qa.delta, "Grid size (rational)")->required();
    s_q->add_option("--level", qa.level, "Cantor level");
    s_q->add_option("--out", qa.out, "Quantized field JSON (default: embedded in the report)");
    s_q->add_option("field", qa.in, "PAField JSON")->required();

    int b_n = 2, b_K = 20;
    std::string b_q;
    auto* s_b = app.add_subcommand("balls", "Closed-form partial sums of the disjoint-balls example");
    s_b->add_option("--n", b_n, "Dimension")->required();
    s_b->add_option("--K", b_K, "Truncation")->required();
    s_b->add_option("--q", b_q, "Exponent q >= 1")->required();

    CacArgs ca;
    auto* s_c = app.add_subcommand("caccioppoli", "Random Caccioppoli-affine fields and their GSBV inequalities");
    s_c->add_option("--seed", ca.seed, "First seed")->required();
    s_c->add_option("--pieces", ca.pieces, "Pieces per field")->required();
    s_c->add_option("--mode", ca.mode, "rigid or affine")->required();
    s_c->add_option("--trials", ca.trials, "Number of consecutive seeds");

    DensityArgs da;
    auto* s_d = app.add_subcommand("density", "Multiscale density partial sums");
    s_d->add_option("--probe", da.probe, "const, bump or remark")->required();
    s_d->add_option("--K", da.K, "Number of scales")->required();
    s_d->add_option("--x", da.x, "Centre x1,x2 (rationals)");
    s_d->add_option("--p", da.p, "Exponent of the L^p comparison");

    int af_trials = 1000;
    unsigned long long af_seed = 0;
    auto* s_a = app.add_subcommand("affine-lemma", "Random affine-recovery trials");
    s_a->add_option("--trials", af_trials, "Number of trials")->required();
    s_a->add_option("--seed", af_seed, "Seed")->required();

    std::string r_in, r_svg;
    int r_coarsen = 0;
    std::size_t r_cap = 50000;
    auto* s_r = app.add_subcommand("render", "SVG rendering of a field partition");
    s_r->add_option("field", r_in, "Field JSON")->required();
    s_r->add_option("--svg", r_svg, "Output SVG")->required();
    s_r->add_option("--coarsen", r_coarsen, "Sample an n x n grid instead of drawing every cell");
    s_r->add_option("--cap", r_cap, "Largest cell count drawn cell by cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Run run;
    run.manifest_path = manifest;
    if (run.manifest_path.empty()) {
        std::string primary = *s_pj      ? (pj.out.empty() ? pj.trace : pj.out)
                              : *s_asm   ? asm_out
                              : *s_pc    ? pc.out
                              : *s_meas  ? meas_csv
                              : *s_q     ? qa.out
                              : *s_r     ? r_svg
                                         : std::string();
        if (!primary.empty())
            run.manifest_path = primary + ".manifest.json";
    }
    auto t0 = std::chrono::steady_clock::now();
    std::string stdout_text;
    try {
        Json report;
        bool json_report = true;
        if (*s_pj) {
            run.subcommand = "pure-jump";
            report = cmd_pure_jump(pj, run);
        } else if (*s_asm) {
            run.subcommand = "assemble";
            report = cmd_assemble(asm_K, asm_out, run);
        } else if (*s_pc) {
            run.subcommand = "pure-cantor";
            report = cmd_pure_cantor(pc, run);
        } else if (*s_meas) {
            run.subcommand = "measure";
            report = cmd_measure(meas_in, meas_csv, run);
        } else if (*s_q) {
            run.subcommand = "quantize";
            report = cmd_quantize(qa, run);
        } else if (*s_b) {
            run.subcommand = "balls";
            stdout_text = cmd_balls(b_n, b_K, real_arg(b_q, "--q"), run);
            json_report = false;
        } else if (*s_c) {
            run.subcommand = "caccioppoli";
            stdout_text = cmd_caccioppoli(ca, run, report);
            json_report = false;
        } else if (*s_d) {
            run.subcommand = "density";
            stdout_text = cmd_density(da, run);
            json_report = false;
        } else if (*s_a) {
            run.subcommand = "affine-lemma";
            stdout_text = cmd_affine(af_trials, af_seed, run, report);
            json_report = false;
        } else if (*s_r) {
            run.subcommand = "render";
            report = cmd_render(r_in, r_svg, r_coarsen, r_cap, run);
        }
        if (json_report) {
            Json doc;
            doc["subcommand"] = run.subcommand;
            doc["run"] = run.reference();
            doc["report"] = std::move(report);
            doc["violations"] = run.violations;
            stdout_text = dump_json(doc);
        }
    } catch (const UsageError& e) {
        std::cerr << "bdforge " << run.subcommand << ": " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "bdforge " << run.subcommand << ": " << e.what() << "\n";
        return 2;
    } catch (const FieldError& e) {
        // Cap overruns and other construction failures.
        std::cerr << "bdforge " << run.subcommand << ": " << e.what() << "\n";
        return 2;
    }
    std::cout << stdout_text;
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_manifest(run, seconds);
    } catch (const std::exception& e) {
        std::cerr << "bdforge " << run.subcommand << ": " << e.what() << "\n";
        return 2;
    }
    if (!run.violations.empty()) {
        std::cerr << dump_json(Json{{"subcommand", run.subcommand}, {"violations", run.violations}});
        return 1;
    }
    return 0;
}
