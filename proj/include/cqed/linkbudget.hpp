#pragma once

// Cascaded transmission budget. Each element is given as a linear efficiency,
// an insertion loss in dB, or a propagation loss (dB/cm) over a length.
// Losses are positive dB numbers; transmissions in dB are negative.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cqed/errors.hpp"
#include "cqed/quantities.hpp"

namespace cqed::linkbudget {

struct LinearEfficiency {
    double value = 1.0;
};

struct InsertionLossDb {
    double db = 0.0;
};

struct PropagationLoss {
    double db_per_cm = 0.0;
    double length_cm = 0.0;
};

using Representation = std::variant<LinearEfficiency, InsertionLossDb, PropagationLoss>;

/// eta = 10^(-loss * length / 10).
inline Efficiency propagation_efficiency(double loss_db_per_cm, double length_cm) {
    if (!(loss_db_per_cm >= 0.0) || !(length_cm >= 0.0) || !std::isfinite(loss_db_per_cm * length_cm)) {
        throw DomainError("propagation loss and length must be finite and non-negative");
    }
    return Efficiency(db_to_linear(-loss_db_per_cm * length_cm));
}

/// One-sigma uncertainty, either in dB or as a linear efficiency.
struct Uncertainty {
    enum class Kind { db, linear } kind = Kind::db;
    double value = 0.0;
};

struct LinkElement {
    std::string name;
    Representation repr;
    std::optional<Uncertainty> sigma;

    Efficiency efficiency() const {
        struct Visitor {
            double operator()(const LinearEfficiency& e) const {
                if (!(e.value >= 0.0 && e.value <= 1.0)) {
                    throw DomainError("element efficiency must lie in [0, 1]");
                }
                return e.value;
            }
            double operator()(const InsertionLossDb& l) const {
                if (!(l.db >= 0.0) || !std::isfinite(l.db)) throw DomainError("insertion loss must be >= 0 dB");
                return db_to_linear(-l.db);
            }
            double operator()(const PropagationLoss& p) const {
                return propagation_efficiency(p.db_per_cm, p.length_cm).value();
            }
        };
        return Efficiency(std::visit(Visitor{}, repr));
    }

    /// Transmission in dB (<= 0); -inf for a zero-efficiency element.
    double transmission_db() const {
        const double e = efficiency().value();
        return e > 0.0 ? linear_to_db(e) : -std::numeric_limits<double>::infinity();
    }

    /// One-sigma uncertainty of the transmission in dB, first-order.
    double sigma_db() const {
        if (!sigma) return 0.0;
        if (sigma->kind == Uncertainty::Kind::db) return sigma->value;
        const double e = efficiency().value();
        if (!(e > 0.0)) return std::numeric_limits<double>::infinity();
        return 10.0 / std::log(10.0) * sigma->value / e;
    }
};

inline LinkElement efficiency_element(std::string name, double eff, std::optional<double> sigma_linear = {}) {
    LinkElement e{std::move(name), LinearEfficiency{eff}, std::nullopt};
    if (sigma_linear) e.sigma = Uncertainty{Uncertainty::Kind::linear, *sigma_linear};
    return e;
}

inline LinkElement loss_element(std::string name, double loss_db, std::optional<double> sigma_db = {}) {
    LinkElement e{std::move(name), InsertionLossDb{loss_db}, std::nullopt};
    if (sigma_db) e.sigma = Uncertainty{Uncertainty::Kind::db, *sigma_db};
    return e;
}

inline LinkElement propagation_element(std::string name, double db_per_cm, double length_cm) {
    return {std::move(name), PropagationLoss{db_per_cm, length_cm}, std::nullopt};
}

struct ElementRow {
    std::string name;
    double efficiency = 1.0;
    double transmission_db = 0.0;
    double sigma_db = 0.0;
    double cumulative_efficiency = 1.0;
    double cumulative_db = 0.0;
};

struct ChainReport {
    std::vector<ElementRow> rows;
    double total_efficiency = 1.0;
    double total_db = 0.0;             // 10 log10(total_efficiency); -inf when any element is zero
    double sigma_db = 0.0;             // sum-in-quadrature of element sigmas
    double efficiency_low = 1.0;       // 10^((total_db - sigma) / 10)
    double efficiency_high = 1.0;
    bool has_zero_element = false;
    std::optional<double> measured_efficiency;
    std::optional<double> residual_efficiency;  // measured / modeled
    std::optional<double> residual_db;          // measured_db - modeled_db
};

/// Product of element efficiencies, with the dB total accumulated as a sum.
inline ChainReport chain_efficiency(const std::vector<LinkElement>& chain,
                                    std::optional<double> measured_total = std::nullopt) {
    if (chain.empty()) throw DomainError("link chain is empty");
    ChainReport rep;
    double eff = 1.0, db = 0.0, var = 0.0;
    for (const auto& el : chain) {
        ElementRow row;
        row.name = el.name;
        row.efficiency = el.efficiency().value();
        row.transmission_db = el.transmission_db();
        row.sigma_db = el.sigma_db();
        eff *= row.efficiency;
        db += row.transmission_db;
        var += row.sigma_db * row.sigma_db;
        row.cumulative_efficiency = eff;
        row.cumulative_db = db;
        if (row.efficiency == 0.0) rep.has_zero_element = true;
        rep.rows.push_back(std::move(row));
    }
    rep.total_efficiency = eff;
    rep.total_db = db;
    rep.sigma_db = std::sqrt(var);
    rep.efficiency_low = rep.has_zero_element ? 0.0 : db_to_linear(db - rep.sigma_db);
    rep.efficiency_high = rep.has_zero_element ? 0.0 : std::min(1.0, db_to_linear(db + rep.sigma_db));
    if (measured_total) {
        if (!(*measured_total > 0.0 && *measured_total <= 1.0)) {
            throw DomainError("measured total efficiency must lie in (0, 1]");
        }
        rep.measured_efficiency = *measured_total;
        if (!rep.has_zero_element) {
            rep.residual_efficiency = *measured_total / eff;
            rep.residual_db = linear_to_db(*measured_total) - db;
        }
    }
    return rep;
}

namespace detail {
inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}
}  // namespace detail

/// Aligned plain-text table of a chain report.
inline std::string format_table(const ChainReport& rep) {
    std::size_t w = 8;
    for (const auto& r : rep.rows) w = std::max(w, r.name.size());
    auto pad = [w](const std::string& s) { return s + std::string(w - s.size(), ' '); };

    char head[96];
    std::snprintf(head, sizeof(head), "  %10s  %8s  %6s  %10s  %8s\n", "efficiency", "dB", "+/-dB", "cumulative",
                  "cum. dB");
    std::string out = pad("element") + head;
    out += std::string(w + 56, '-') + "\n";
    for (const auto& r : rep.rows) {
        out += pad(r.name) + "  " + detail::fmt("%10.4f", r.efficiency) + "  " + detail::fmt("%8.3f", r.transmission_db) +
               "  " + detail::fmt("%6.3f", r.sigma_db) + "  " + detail::fmt("%10.4f", r.cumulative_efficiency) + "  " +
               detail::fmt("%8.3f", r.cumulative_db) + "\n";
    }
    out += std::string(w + 56, '-') + "\n";
    out += pad("total") + "  " + detail::fmt("%10.4f", rep.total_efficiency) + "  " +
           detail::fmt("%8.3f", rep.total_db) + "  " + detail::fmt("%6.3f", rep.sigma_db) + "\n";
    if (rep.has_zero_element) out += "warning: chain contains a zero-efficiency element\n";
    if (rep.measured_efficiency) {
        out += pad("measured") + "  " + detail::fmt("%10.4f", *rep.measured_efficiency) + "  " +
               detail::fmt("%8.3f", linear_to_db(*rep.measured_efficiency)) + "\n";
    }
    if (rep.residual_efficiency) {
        out += pad("residual") + "  " + detail::fmt("%10.4f", *rep.residual_efficiency) + "  " +
               detail::fmt("%8.3f", *rep.residual_db) + "  (unexplained)\n";
    }
    return out;
}

}  // namespace cqed::linkbudget
