#pragma once

// JSON views of results. Non-finite numbers are written as null.

#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqed/fits.hpp"
#include "cqed/linkbudget.hpp"
#include "cqed/purcell.hpp"

namespace cqed::report {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json numbers(std::span<const double> v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

inline Json model_spec(const fitting::FitModel& m) {
    Json j;
    j["kind"] = fitting::to_string(m.kind());
    j["parameters"] = m.names();
    j["reference"] = m.reference();
    if (m.kind() == fitting::ModelKind::single_exponential) j["with_background"] = m.with_background();
    return j;
}

inline fitting::FitModel model_from_spec(const Json& j) {
    try {
        const auto kind = fitting::model_kind_from_string(j.at("kind").get<std::string>());
        const auto m = fitting::FitModel::make(kind, j.value("with_background", false), j.value("reference", 0.0));
        if (j.contains("parameters") && j.at("parameters").get<std::vector<std::string>>() != m.names()) {
            throw UsageError("model parameter names do not match kind " + fitting::to_string(kind));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad model spec: ") + e.what());
    }
}

inline Json fit_result(const fitting::FitResult& r) {
    Json j;
    j["model"] = model_spec(r.model);
    Json params, errors;
    for (std::size_t i = 0; i < r.params.size(); ++i) {
        params[r.model.names()[i]] = number(r.params[i]);
        errors[r.model.names()[i]] = number(r.standard_errors[i]);
    }
    j["params"] = params;
    j["standard_errors"] = errors;
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < r.covariance.cols(); ++k) row.push_back(number(r.covariance(i, k)));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    j["identifiable"] = r.identifiable;
    j["fixed"] = r.fixed;
    j["chi2"] = number(r.chi2);
    j["reduced_chi2"] = number(r.reduced_chi2);
    j["residual_norm"] = number(r.residual_norm);
    j["n_points"] = r.n_points;
    j["dof"] = r.dof;
    j["iterations"] = r.n_iterations;
    j["converged"] = r.converged;
    j["termination"] = r.termination;
    j["warnings"] = r.warnings;
    return j;
}

/// Model and parameter values from a serialized fit result, for replay.
struct Replay {
    fitting::FitModel model;
    std::vector<double> params;

    double operator()(double x) const { return model.eval(x, params); }
};

inline Replay replay_from_json(const Json& j) {
    const Json& fit = j.contains("fit") ? j.at("fit") : j;
    Replay r{model_from_spec(fit.at("model")), {}};
    try {
        for (const auto& name : r.model.names()) r.params.push_back(fit.at("params").at(name).get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad fit result: ") + e.what());
    }
    r.model.check_params(r.params);
    return r;
}

inline Json purcell_result(const purcell::PurcellResult& r, const purcell::EfficiencyFactors& eta) {
    Json j;
    j["eta_qe"] = eta.quantum_efficiency;
    j["eta_dw"] = eta.debye_waller;
    j["C"] = number(r.cooperativity);
    j["F_P"] = number(r.purcell);
    j["C_ZPL"] = number(r.zpl_cooperativity);
    j["F_ZPL"] = number(r.zpl_purcell);
    return j;
}

inline Json chain_report(const linkbudget::ChainReport& rep) {
    Json rows = Json::array();
    for (const auto& r : rep.rows) {
        Json e;
        e["name"] = r.name;
        e["efficiency"] = number(r.efficiency);
        e["transmission_db"] = number(r.transmission_db);
        e["sigma_db"] = number(r.sigma_db);
        e["cumulative_efficiency"] = number(r.cumulative_efficiency);
        e["cumulative_db"] = number(r.cumulative_db);
        rows.push_back(e);
    }
    Json j;
    j["elements"] = rows;
    j["total_efficiency"] = number(rep.total_efficiency);
    j["total_db"] = number(rep.total_db);
    j["sigma_db"] = number(rep.sigma_db);
    j["efficiency_range"] = {number(rep.efficiency_low), number(rep.efficiency_high)};
    j["zero_element"] = rep.has_zero_element;
    if (rep.measured_efficiency) {
        Json m;
        m["measured_efficiency"] = *rep.measured_efficiency;
        m["measured_db"] = linear_to_db(*rep.measured_efficiency);
        if (rep.residual_efficiency) {
            m["residual_efficiency"] = *rep.residual_efficiency;
            m["residual_db"] = *rep.residual_db;
        }
        j["measured"] = m;
    }
    return j;
}

/// Chain specification: either a list of elements or {"elements": [...],
/// "measured_total": x}. Each element holds "name" and exactly one of
/// "efficiency", "loss_db" or ("loss_db_per_cm", "length_cm"), plus optional
/// "sigma_db" or "sigma_efficiency".
struct ChainSpec {
    std::vector<linkbudget::LinkElement> elements;
    std::optional<double> measured_total;
};

inline linkbudget::LinkElement element_from_json(const Json& e, std::size_t index) {
    using namespace linkbudget;
    const std::string where = "element " + std::to_string(index);
    if (!e.is_object()) throw UsageError(where + ": expected an object");
    static const std::set<std::string> known{"name",      "efficiency", "loss_db", "loss_db_per_cm",
                                             "length_cm", "sigma_db",   "sigma_efficiency"};
    for (const auto& [k, v] : e.items()) {
        if (!known.count(k)) throw UsageError(where + ": unknown key '" + k + "'");
        if (k != "name" && !v.is_number()) throw UsageError(where + ": '" + k + "' must be a number");
    }
    const std::string name = e.contains("name") ? e.at("name").get<std::string>() : "element" + std::to_string(index);
    const int reps = static_cast<int>(e.contains("efficiency")) + static_cast<int>(e.contains("loss_db")) +
                     static_cast<int>(e.contains("loss_db_per_cm") || e.contains("length_cm"));
    if (reps != 1) {
        throw UsageError(where + ": give exactly one of efficiency, loss_db, or loss_db_per_cm with length_cm");
    }
    LinkElement out;
    if (e.contains("efficiency")) {
        out = efficiency_element(name, e.at("efficiency").get<double>());
    } else if (e.contains("loss_db")) {
        out = loss_element(name, e.at("loss_db").get<double>());
    } else {
        if (!e.contains("loss_db_per_cm") || !e.contains("length_cm")) {
            throw UsageError(where + ": propagation loss needs both loss_db_per_cm and length_cm");
        }
        out = propagation_element(name, e.at("loss_db_per_cm").get<double>(), e.at("length_cm").get<double>());
    }
    if (e.contains("sigma_db") && e.contains("sigma_efficiency")) {
        throw UsageError(where + ": give at most one of sigma_db and sigma_efficiency");
    }
    if (e.contains("sigma_db")) out.sigma = Uncertainty{Uncertainty::Kind::db, e.at("sigma_db").get<double>()};
    if (e.contains("sigma_efficiency")) {
        out.sigma = Uncertainty{Uncertainty::Kind::linear, e.at("sigma_efficiency").get<double>()};
    }
    if (out.sigma && !(out.sigma->value >= 0.0)) throw DomainError(where + ": uncertainty must be >= 0");
    return out;
}

inline ChainSpec chain_from_json(const Json& j) {
    ChainSpec spec;
    const Json* list = &j;
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (k != "elements" && k != "measured_total") throw UsageError("chain: unknown key '" + k + "'");
        }
        if (!j.contains("elements")) throw UsageError("chain: missing 'elements'");
        list = &j.at("elements");
        if (j.contains("measured_total")) {
            if (!j.at("measured_total").is_number()) throw UsageError("chain: measured_total must be a number");
            spec.measured_total = j.at("measured_total").get<double>();
        }
    }
    if (!list->is_array()) throw UsageError("chain: expected a list of elements");
    for (std::size_t i = 0; i < list->size(); ++i) spec.elements.push_back(element_from_json((*list)[i], i));
    return spec;
}

}  // namespace cqed::report
