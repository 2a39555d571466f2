#pragma once

// Evaluation quantities: attachment and graph scores, exact match, R_K and
// Pearson correlations, per-category accuracy, probe-vs-ceiling deltas.
// Rates are computed from integer counts and divided once.

#include "sift/corpus_io.h"
#include "sift/graph.h"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sift {

/// Fraction of tokens with the correct head and label.
double las(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold);
/// Fraction of tokens with the correct head.
double uas(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Micro-averaged over labeled directed edges. Empty prediction: precision
/// 0 when gold is non-empty, 1 when both are empty. include_tops adds each
/// top as an edge from a virtual root.
PRF labeled_f1(const std::vector<SemanticGraph>& pred, const std::vector<SemanticGraph>& gold,
               bool include_tops = false);

/// Fraction of graphs whose edge sets match exactly (labels compared iff
/// labeled).
double exact_match(const std::vector<SemanticGraph>& pred, const std::vector<SemanticGraph>& gold,
                   bool labeled, bool include_tops = false);
double exact_match(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold,
                   bool labeled);

/// Multiclass correlation from the K × K confusion matrix. A degenerate
/// denominator gives 0. Throws ValidationError for K < 2 or labels outside
/// [0, K).
double r_k_correlation(const std::vector<int>& pred, const std::vector<int>& gold, int k);

/// Sample correlation; 0 when either side has zero variance.
double pearson(const std::vector<double>& pred, const std::vector<double>& gold);

double accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

struct CategoryAccuracy {
    std::map<std::string, double> per_category;
    std::map<std::string, int> counts;
    double overall = 0.0;
};

inline constexpr const char* kDefaultCategory = "(none)";

/// Per-tag accuracy plus overall; empty tags aggregate under kDefaultCategory.
CategoryAccuracy accuracy_by_category(const std::vector<std::string>& categories,
                                      const std::vector<int>& pred, const std::vector<int>& gold);

struct Delta {
    double absolute = 0.0;
    double relative = 0.0;  // fraction of the ceiling
};

/// absolute = probe − ceiling, relative = absolute / ceiling. Throws
/// ValidationError when the ceiling is 0.
Delta probe_delta(double probe, double ceiling);

struct EvalReport {
    std::optional<double> las;
    std::optional<double> uas;
    std::optional<PRF> labeled_f1;
    std::optional<double> lem;
    std::optional<double> uem;
    std::optional<double> accuracy;
    std::optional<double> r_k;
    std::optional<double> pearson;
    std::optional<double> mse;
    std::map<std::string, double> per_category;
    std::map<std::string, int> category_counts;
    std::optional<double> loss;
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

/// Fixed-precision rendering used in every printed report.
std::string format_fixed(double v, int digits);

} // namespace sift
