#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "estimate.hpp"
#include "model.hpp"

namespace sdhawkes {

// Model document layout:
//   {"event_labels": [...], "state_labels": [...],
//    "nu": [e], "alpha": [e'][x'][e], "beta": [e'][x'][e], "phi": [e][x][x']}
inline nlohmann::json model_to_json(const SdHawkesModel& model) {
    const auto& d = model.dims;
    nlohmann::json j;
    j["event_labels"] = d.event_labels;
    j["state_labels"] = d.state_labels;
    j["nu"] = model.kernel.nu;

    auto coeff_array = [&](const std::vector<double>& values) {
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t ep = 0; ep < d.n_event_types; ++ep) {
            nlohmann::json by_state = nlohmann::json::array();
            for (std::size_t xp = 0; xp < d.n_states; ++xp) {
                nlohmann::json row = nlohmann::json::array();
                for (std::size_t e = 0; e < d.n_event_types; ++e)
                    row.push_back(values[model.kernel.index(ep, xp, e)]);
                by_state.push_back(std::move(row));
            }
            out.push_back(std::move(by_state));
        }
        return out;
    };
    j["alpha"] = coeff_array(model.kernel.alpha);
    j["beta"] = coeff_array(model.kernel.beta);

    nlohmann::json phi = nlohmann::json::array();
    for (std::size_t e = 0; e < d.n_event_types; ++e) {
        nlohmann::json matrix = nlohmann::json::array();
        for (std::size_t x = 0; x < d.n_states; ++x) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t y = 0; y < d.n_states; ++y) row.push_back(model.phi.at(e, x, y));
            matrix.push_back(std::move(row));
        }
        phi.push_back(std::move(matrix));
    }
    j["phi"] = std::move(phi);
    return j;
}

inline SdHawkesModel model_from_json(const nlohmann::json& input) {
    // Accept an estimate-result document wrapping the model.
    const nlohmann::json& j = input.contains("model") ? input.at("model") : input;
    for (const char* key : {"event_labels", "state_labels", "nu", "alpha", "beta", "phi"})
        if (!j.contains(key)) throw DataError(std::string("model document missing key '") + key + "'");

    SdHawkesModel model;
    model.dims.event_labels = j.at("event_labels").get<std::vector<std::string>>();
    model.dims.state_labels = j.at("state_labels").get<std::vector<std::string>>();
    model.dims.n_event_types = model.dims.event_labels.size();
    model.dims.n_states = model.dims.state_labels.size();
    const std::size_t d_e = model.dims.n_event_types;
    const std::size_t d_x = model.dims.n_states;

    model.kernel = ExpKernelParams(d_e, d_x);
    model.kernel.nu = j.at("nu").get<std::vector<double>>();
    if (model.kernel.nu.size() != d_e) throw DataError("nu length differs from event labels");

    auto read_coeff = [&](const nlohmann::json& arr, std::vector<double>& out, const char* what) {
        if (arr.size() != d_e) throw DataError(std::string(what) + " has wrong outer length");
        for (std::size_t ep = 0; ep < d_e; ++ep) {
            if (arr[ep].size() != d_x) throw DataError(std::string(what) + " has wrong state length");
            for (std::size_t xp = 0; xp < d_x; ++xp) {
                if (arr[ep][xp].size() != d_e)
                    throw DataError(std::string(what) + " has wrong inner length");
                for (std::size_t e = 0; e < d_e; ++e)
                    out[model.kernel.index(ep, xp, e)] = arr[ep][xp][e].get<double>();
            }
        }
    };
    read_coeff(j.at("alpha"), model.kernel.alpha, "alpha");
    read_coeff(j.at("beta"), model.kernel.beta, "beta");

    model.phi = TransitionDistribution(d_e, d_x, 0.0);
    const auto& phi = j.at("phi");
    if (phi.size() != d_e) throw DataError("phi has wrong outer length");
    for (std::size_t e = 0; e < d_e; ++e) {
        if (phi[e].size() != d_x) throw DataError("phi matrix has wrong row count");
        for (std::size_t x = 0; x < d_x; ++x) {
            if (phi[e][x].size() != d_x) throw DataError("phi matrix has wrong column count");
            for (std::size_t y = 0; y < d_x; ++y) model.phi.at(e, x, y) = phi[e][x][y].get<double>();
        }
    }
    require_valid(model);
    return model;
}

inline void save_model(const SdHawkesModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << model_to_json(model).dump(2) << "\n";
}

inline SdHawkesModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad JSON in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

// Sequence files: CSV with header time,event,state (labels when known), plus
// a sidecar JSON {"initial_state": int, "t0": float, "T": float} carrying the
// label lists as well so the CSV round-trips without a model document.
inline std::string sidecar_path(const std::string& csv_path) {
    const std::size_t dot = csv_path.rfind('.');
    const std::size_t slash = csv_path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return csv_path + ".json";
    return csv_path.substr(0, dot) + ".json";
}

inline void save_sequence(const MarkedSequence& seq, const Dimensions& dims,
                          const std::string& csv_path) {
    seq.check(dims);
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write " + csv_path);
    csv << "time,event,state\n";
    for (std::size_t n = 0; n < seq.size(); ++n) {
        csv << format_double(seq.times[n]) << ',' << dims.event_labels[seq.events[n]] << ','
            << dims.state_labels[seq.states[n]] << "\n";
    }

    nlohmann::json sidecar;
    sidecar["initial_state"] = seq.initial_state;
    sidecar["t0"] = seq.window_start;
    sidecar["T"] = seq.window_end;
    sidecar["event_labels"] = dims.event_labels;
    sidecar["state_labels"] = dims.state_labels;
    const std::string side = sidecar_path(csv_path);
    std::ofstream out(side);
    if (!out) throw DataError("cannot write " + side);
    out << sidecar.dump(2) << "\n";
}

namespace detail {

// Resolves a CSV cell to an index: a known label, or a new one collected in
// order of first appearance when the sidecar fixed no label lists.
inline std::size_t resolve_label(const std::string& cell, std::vector<std::string>& labels,
                                 bool labels_fixed, std::size_t line) {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cell) return i;
    if (labels_fixed)
        throw DataError("line " + std::to_string(line) + ": unknown label '" + cell + "'");
    labels.push_back(cell);
    return labels.size() - 1;
}

// When every collected label is a bare non-negative integer, reinterpret the
// cells as indices directly (label k at position k), so "0"/"1" columns mean
// what they say regardless of first-appearance order.
inline void renumber_if_numeric(std::vector<std::string>& labels,
                                std::vector<std::size_t>& indices) {
    if (labels.empty()) return;
    std::vector<std::size_t> values(labels.size());
    std::size_t max_value = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::string& label = labels[i];
        if (label.empty() || label.find_first_not_of("0123456789") != std::string::npos) return;
        values[i] = std::stoul(label);
        max_value = std::max(max_value, values[i]);
        if (max_value > 4096) return;  // looks like ids, not a label set
    }
    for (auto& index : indices) index = values[index];
    labels.clear();
    for (std::size_t v = 0; v <= max_value; ++v) labels.push_back(std::to_string(v));
}

}  // namespace detail

inline std::pair<MarkedSequence, Dimensions> load_sequence(const std::string& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw DataError("cannot open sequence file " + csv_path);

    MarkedSequence seq;
    std::vector<std::string> event_labels;
    std::vector<std::string> state_labels;
    bool labels_fixed = false;

    const std::string side = sidecar_path(csv_path);
    if (std::ifstream sidecar(side); sidecar) {
        nlohmann::json j;
        try {
            sidecar >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad JSON in " + side + ": " + e.what());
        }
        seq.initial_state = j.at("initial_state").get<std::size_t>();
        seq.window_start = j.at("t0").get<double>();
        seq.window_end = j.at("T").get<double>();
        if (j.contains("event_labels")) {
            event_labels = j.at("event_labels").get<std::vector<std::string>>();
            state_labels = j.at("state_labels").get<std::vector<std::string>>();
            labels_fixed = true;
        }
    } else {
        throw DataError("missing sidecar file " + side);
    }

    std::string line;
    std::size_t line_number = 0;
    bool header_seen = false;
    while (std::getline(csv, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string time_cell, event_cell, state_cell;
        if (!std::getline(row, time_cell, ',') || !std::getline(row, event_cell, ',') ||
            !std::getline(row, state_cell))
            throw DataError("line " + std::to_string(line_number) + ": expected 3 columns");
        if (!state_cell.empty() && state_cell.back() == '\r') state_cell.pop_back();
        if (!header_seen) {
            header_seen = true;
            if (time_cell == "time") continue;  // header row
        }
        try {
            seq.times.push_back(std::stod(time_cell));
        } catch (const std::exception&) {
            throw DataError("line " + std::to_string(line_number) + ": bad time '" + time_cell + "'");
        }
        seq.events.push_back(detail::resolve_label(event_cell, event_labels, labels_fixed, line_number));
        seq.states.push_back(detail::resolve_label(state_cell, state_labels, labels_fixed, line_number));
    }
    if (!labels_fixed) {
        detail::renumber_if_numeric(event_labels, seq.events);
        detail::renumber_if_numeric(state_labels, seq.states);
    }

    Dimensions dims;
    dims.event_labels = event_labels;
    dims.state_labels = state_labels.empty() ? std::vector<std::string>{"0"} : state_labels;
    dims.n_event_types = dims.event_labels.size();
    dims.n_states = dims.state_labels.size();
    if (dims.n_event_types == 0) throw DataError("sequence has no events and no labels");
    seq.check(dims);
    return {std::move(seq), std::move(dims)};
}

inline nlohmann::json breakdown_to_json(const LikelihoodBreakdown& breakdown) {
    return nlohmann::json{{"transition_term", breakdown.transition_term},
                          {"l_plus", breakdown.l_plus},
                          {"l_minus", breakdown.l_minus},
                          {"zero_transition", breakdown.zero_transition},
                          {"total", breakdown.total}};
}

inline nlohmann::json estimate_result_to_json(const EstimateResult& result) {
    nlohmann::json j;
    j["model"] = model_to_json(result.model);
    j["log_likelihood"] = result.likelihood.total;
    j["likelihood"] = breakdown_to_json(result.likelihood);
    j["chosen_start"] = result.chosen_start;
    j["phi_row_observed"] = result.phi_row_observed;
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& t : result.traces) {
        traces.push_back({{"event_type", t.event_type},
                          {"start_id", t.start_id},
                          {"start_kind", t.start_kind},
                          {"iterations", t.iterations},
                          {"evaluations", t.evaluations},
                          {"final_value", t.final_value},
                          {"converged", t.converged}});
    }
    j["traces"] = std::move(traces);
    return j;
}

}  // namespace sdhawkes
