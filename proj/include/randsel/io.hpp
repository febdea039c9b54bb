#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "randsel/errors.hpp"
#include "randsel/estimator.hpp"
#include "randsel/experiments.hpp"
#include "randsel/lti.hpp"

namespace randsel {

// All floating-point output goes through here: 17 significant digits, enough
// to round-trip any double, and byte-stable across runs.
inline std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace io_detail {

using nlohmann::json;

inline const json& require_field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end())
        throw InputError(std::string("missing field '") + name + "'");
    return *it;
}

inline Matrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty())
        throw InputError(std::string("field '") + name + "' must be a non-empty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0)
        throw InputError(std::string("field '") + name + "' must contain non-empty rows");
    Matrix out(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols)
            throw InputError(std::string("field '") + name + "' row " +
                             std::to_string(r) + " has inconsistent length");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number())
                throw InputError(std::string("field '") + name + "' row " +
                                 std::to_string(r) + " column " + std::to_string(c) +
                                 " is not a number");
            out(r, c) = row[c].get<double>();
        }
    }
    return out;
}

inline json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace io_detail

// System file schema:
//   {"n":.., "m":.., "T":.., "A":[[..]], "C":[[..]], "Q":[[..]]|null, "R":[[..]]|null}
// Matrices are arrays of rows (row-major), IEEE-754 doubles.
inline LtiSystem system_from_json(const nlohmann::json& j) {
    using io_detail::require_field;
    LtiSystem sys;
    const int n = require_field(j, "n").get<int>();
    const int m = require_field(j, "m").get<int>();
    sys.T = require_field(j, "T").get<int>();
    sys.A = io_detail::matrix_from_json(require_field(j, "A"), "A");
    sys.C = io_detail::matrix_from_json(require_field(j, "C"), "C");
    if (sys.A.rows() != n || sys.A.cols() != n)
        throw InputError("field 'A' does not match the declared n");
    if (sys.C.rows() != m || sys.C.cols() != n)
        throw InputError("field 'C' does not match the declared m x n");
    if (j.contains("Q") && !j["Q"].is_null())
        sys.Q = io_detail::matrix_from_json(j["Q"], "Q");
    if (j.contains("R") && !j["R"].is_null())
        sys.R = io_detail::matrix_from_json(j["R"], "R");
    sys.validate();
    return sys;
}

inline nlohmann::json system_to_json(const LtiSystem& sys) {
    nlohmann::json j;
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["T"] = sys.T;
    j["A"] = io_detail::matrix_to_json(sys.A);
    j["C"] = io_detail::matrix_to_json(sys.C);
    j["Q"] = sys.Q ? io_detail::matrix_to_json(*sys.Q) : nlohmann::json();
    j["R"] = sys.R ? io_detail::matrix_to_json(*sys.R) : nlohmann::json();
    return j;
}

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed JSON in '" + path + "': " + e.what());
    }
}

inline LtiSystem load_system(const std::string& path) {
    try {
        return system_from_json(parse_json_file(path));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline void save_system(const std::string& path, const LtiSystem& sys) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << system_to_json(sys).dump(2) << '\n';
}

// Reduced-system export: {"kept":[..], "scale":[..], "C_bar":[[..]], "R_bar":[[..]]}
// where scale[r] is the Pi entry of kept sensor r.
inline nlohmann::json reduced_to_json(const ReducedSystem& red) {
    nlohmann::json j;
    j["kept"] = red.kept;
    std::vector<double> scale(red.kept.size());
    for (int r = 0; r < red.q(); ++r) scale[r] = red.Pi(r, red.kept[r]);
    j["scale"] = scale;
    j["C_bar"] = io_detail::matrix_to_json(red.C_bar);
    j["R_bar"] = io_detail::matrix_to_json(red.R_bar);
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.eps_grid = ExperimentConfig::default_eps_grid();
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("m")) cfg.m = j["m"].get<int>();
    if (j.contains("T")) cfg.T = j["T"].get<int>();
    if (j.contains("eps_grid")) cfg.eps_grid = j["eps_grid"].get<std::vector<double>>();
    if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("strategy"))
        cfg.strategy = strategy_from_string(j["strategy"].get<std::string>());
    if (j.contains("metric")) cfg.metric = metric_from_string(j["metric"].get<std::string>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("variant")) cfg.variant = variant_from_string(j["variant"].get<std::string>());
    if (j.contains("normalize")) cfg.normalize = j["normalize"].get<bool>();
    if (j.contains("c_dist")) cfg.c_dist = cdist_from_string(j["c_dist"].get<std::string>());
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    try {
        return config_from_json(parse_json_file(path));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["n"] = cfg.n;
    j["m"] = cfg.m;
    j["T"] = cfg.T;
    j["eps_grid"] = cfg.eps_grid;
    j["delta"] = cfg.delta;
    j["trials"] = cfg.trials;
    j["strategy"] = to_string(cfg.strategy);
    j["metric"] = to_string(cfg.metric);
    j["seed"] = cfg.seed;
    j["variant"] = to_string(cfg.variant);
    j["normalize"] = cfg.normalize;
    j["c_dist"] = to_string(cfg.c_dist);
    j["jobs"] = cfg.jobs;
    return j;
}

// Fixed CSV column sets, one per experiment kind. Tests and downstream
// tooling rely on these staying put.
inline std::vector<std::string> csv_columns(const std::string& kind) {
    if (kind == "validation")
        return {"eps", "eps_index", "trial", "variant", "c", "q", "expected_unique",
                "lambda_min_w", "lambda_max_w", "trace_w", "lambda_min_g",
                "lambda_max_g", "trace_g", "loewner_pass", "master_seed", "trial_seed"};
    if (kind == "greedy")
        return {"eps", "eps_index", "trial", "metric", "c_greedy", "ratio_greedy",
                "ratio_weighted", "ratio_unique", "master_seed", "trial_seed"};
    if (kind == "estimation")
        return {"eps", "eps_index", "trial", "variant", "c", "q", "loewner_pass",
                "sigma_max", "bound_max", "dominated", "master_seed", "trial_seed"};
    if (kind == "kalman")
        return {"eps", "eps_index", "trial", "variant", "c", "q", "converged",
                "rel_error", "master_seed", "trial_seed"};
    throw InputError("csv_columns: unknown experiment kind '" + kind + "'");
}

namespace io_detail {

inline std::string csv_cell(const TrialRecord& rec, const std::string& col) {
    if (col == "eps") return format_double(rec.eps);
    if (col == "eps_index") return std::to_string(rec.eps_index);
    if (col == "trial") return std::to_string(rec.trial);
    if (col == "variant") return rec.variant;
    if (col == "metric") return rec.metric;
    if (col == "c") return std::to_string(rec.c);
    if (col == "q") return std::to_string(rec.q);
    if (col == "c_greedy") return std::to_string(rec.c_greedy);
    if (col == "expected_unique") return format_double(rec.expected_unique);
    if (col == "lambda_min_w") return format_double(rec.lambda_min_w);
    if (col == "lambda_max_w") return format_double(rec.lambda_max_w);
    if (col == "trace_w") return format_double(rec.trace_w);
    if (col == "lambda_min_g") return format_double(rec.lambda_min_g);
    if (col == "lambda_max_g") return format_double(rec.lambda_max_g);
    if (col == "trace_g") return format_double(rec.trace_g);
    if (col == "loewner_pass") return std::to_string(rec.loewner_pass);
    if (col == "ratio_greedy") return format_double(rec.ratio_greedy);
    if (col == "ratio_weighted") return format_double(rec.ratio_weighted);
    if (col == "ratio_unique") return format_double(rec.ratio_unique);
    if (col == "sigma_max") return format_double(rec.sigma_max);
    if (col == "bound_max") return format_double(rec.bound_max);
    if (col == "dominated") return std::to_string(rec.dominated);
    if (col == "converged") return std::to_string(rec.converged);
    if (col == "rel_error") return format_double(rec.rel_error);
    if (col == "master_seed") return std::to_string(rec.master_seed);
    if (col == "trial_seed") return std::to_string(rec.trial_seed);
    throw Error("csv_cell: unknown column '" + col + "'");
}

}  // namespace io_detail

inline void write_records_csv(std::ostream& out, const ExperimentResult& result) {
    const auto columns = csv_columns(result.kind);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ',';
        out << columns[i];
    }
    out << '\n';
    for (const TrialRecord& rec : result.records) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out << ',';
            out << io_detail::csv_cell(rec, columns[i]);
        }
        out << '\n';
    }
}

inline std::string records_csv_string(const ExperimentResult& result) {
    std::ostringstream out;
    write_records_csv(out, result);
    return out.str();
}

inline nlohmann::json records_to_json(const ExperimentResult& result) {
    nlohmann::json rows = nlohmann::json::array();
    const auto columns = csv_columns(result.kind);
    for (const TrialRecord& rec : result.records) {
        nlohmann::json row;
        for (const auto& col : columns) row[col] = io_detail::csv_cell(rec, col);
        rows.push_back(std::move(row));
    }
    nlohmann::json j;
    j["kind"] = result.kind;
    j["records"] = std::move(rows);
    return j;
}

inline void print_summary(std::ostream& out, const ExperimentResult& result) {
    out << "# " << result.kind << " summary (master seed " << result.master_seed;
    if (result.regenerated_systems > 0)
        out << ", " << result.regenerated_systems << " system regenerations";
    out << ")\n";
    for (const EpsSummary& row : result.summary) {
        out << "eps=" << format_double(row.eps);
        for (const auto& [key, value] : row.stats)
            out << ' ' << key << '=' << format_double(value);
        out << '\n';
    }
}

}  // namespace randsel
