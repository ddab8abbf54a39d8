#pragma once

#include "balls.hpp"
#include "caccioppoli.hpp"
#include "counterexamples.hpp"
#include "fineprops.hpp"
#include "io.hpp"
#include "pure_cantor.hpp"

namespace bdforge {

inline Json to_json(const TraceRow& r)
{
    Json j;
    j["k"] = r.k;
    j["area_omega"] = to_string(r.area_omega);
    j["area_hat"] = to_string(r.area_hat);
    j["grad_l1"] = to_json(r.grad_l1);
    j["grad_increment"] = r.grad_increment;
    j["jump_du"] = to_json(r.jump_du);
    j["jump_increment"] = r.jump_increment;
    j["sup_increment"] = r.sup_increment;
    j["laminate_budget"] = r.laminate_budget;
    j["eps"] = to_string(r.eps);
    j["max_periods"] = r.max_periods;
    j["cells"] = r.cells;
    j["gradients_exact"] = r.gradients_exact;
    return j;
}

inline Json to_json(const IterationTrace& t)
{
    Json j;
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back(to_json(r));
    j["rows"] = std::move(rows);
    j["cap_reached"] = t.cap_reached;
    j["stop_reason"] = t.stop_reason;
    return j;
}

inline Json to_json(const PureJumpResult& r)
{
    Json j;
    j["M"] = to_string(r.M);
    j["scale"] = to_string(r.scale);
    j["k_used"] = r.k_used;
    j["target_met"] = r.target_met;
    j["ratio_needed"] = r.ratio_needed;
    j["ratio_achieved"] = r.ratio_achieved;
    j["strain_zero"] = r.strain_zero;
    j["frame_zero"] = r.frame_zero;
    j["status"] = r.status;
    j["cells"] = r.w.cells.size();
    j["strain"] = to_json(r.report);
    return j;
}

inline Json to_json(const AssemblyResult& r)
{
    Json j;
    Json blocks = Json::array();
    for (const auto& b : r.blocks)
        blocks.push_back(Json{{"k", b.k},
                              {"Q", rect_json(b.Q)},
                              {"M", to_string(b.M)},
                              {"target_met", b.target_met},
                              {"eu", to_json(b.eu)},
                              {"grad", to_json(b.grad)},
                              {"cells", b.cells}});
    j["blocks"] = std::move(blocks);
    j["eu_total"] = to_json(r.eu_total);
    j["grad_total"] = to_json(r.grad_total);
    j["grad_target"] = r.grad_target;
    j["eu_ok"] = r.eu_ok;
    j["grad_ok"] = r.grad_ok;
    j["strain_zero"] = r.strain_zero;
    j["cells"] = r.u.cells.size();
    return j;
}

inline Json to_json(const CantorPipelineReport& r)
{
    Json j;
    j["kstar"] = r.kstar;
    j["m"] = r.m;
    j["gamma"] = to_string(r.gamma);
    j["delta"] = to_string(r.delta);
    j["delta_q"] = to_string(r.delta_q);
    j["N"] = r.N;
    Json steps = Json::array();
    for (const auto& s : r.steps)
        steps.push_back(Json{{"k", s.k},
                             {"omega_cells", s.omega_cells},
                             {"hat_cells", s.hat_cells},
                             {"cells", s.cells},
                             {"eps", to_string(s.eps)},
                             {"laminate_sup", s.laminate_sup},
                             {"sigma", to_json(s.sigma)},
                             {"sigma_budget", s.sigma_budget},
                             {"sigma_ok", s.sigma_ok},
                             {"grad_lower", to_json(s.grad_lower)},
                             {"grad_lower_bound", s.grad_lower_bound},
                             {"grad_lower_ok", s.grad_lower_ok}});
    j["steps"] = std::move(steps);
    j["cells"] = r.cells;
    j["continuous"] = r.continuous;
    j["jump_length"] = to_string(r.jump_length);
    j["boundary_trace_exact"] = r.boundary_trace_exact;
    j["cantor_mass"] = to_json(r.cantor_mass);
    j["c_measured"] = r.c_measured;
    j["mass_bound_form"] = r.mass_bound_form;
    j["band_strain"] = to_json(r.band_strain);
    j["band_lebesgue"] = to_string(r.band_lebesgue);
    j["band_lebesgue_level0"] = to_string(r.band_lebesgue_level0);
    j["band_strain_literal"] = to_json(r.band_strain_literal);
    j["leak_strain"] = to_json(r.leak_strain);
    j["leak_cells"] = r.leak_cells;
    j["grad_off_final"] = to_json(r.grad_off_final);
    j["strain"] = to_json(r.strain);
    return j;
}

inline Json to_json(const GsbvReport& r)
{
    Json j;
    j["pieces"] = r.pieces;
    j["checks"] = r.checks;
    j["identities_exact"] = r.identities_exact;
    Json comps = Json::array();
    for (int i = 0; i < 2; ++i)
        comps.push_back(Json{{"component", i},
                             {"grad", to_json(r.grad[i])},
                             {"jump", to_string(r.jump[i])},
                             {"du_total", to_json(r.du_total[i])},
                             {"du_pieces", to_json(r.du_pieces[i])},
                             {"boundary_mass", to_string(r.boundary_rhs[i])}});
    j["components"] = std::move(comps);
    Json v = Json::array();
    for (const auto& e : r.violations)
        v.push_back(Json{{"piece", e.piece}, {"component", e.component}, {"what", e.what}});
    j["violations"] = std::move(v);
    return j;
}

} // namespace bdforge
