#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tsclean/frame.hpp"
#include "tsclean/serialize.hpp"

namespace tsclean {

/// Downstream task. Classify/Cluster corpora are stored as one frame of
/// consecutive samples, each `series_length` rows long.
struct TaskSpec {
    TaskKind kind = TaskKind::Forecast;
    std::size_t horizon = 1;         // Forecast
    double test_frac = 0.2;          // Forecast tail / Classify test share
    std::size_t series_length = 0;   // Classify, Cluster
    std::vector<int> labels;         // Classify, one per sample
    std::size_t k = 3;               // Cluster
    std::uint64_t seed = 0;

    std::size_t sample_count(std::size_t rows) const;
    /// Throws std::invalid_argument on an inconsistent spec for a frame of `rows` rows.
    void validate(std::size_t rows) const;
    bool operator==(const TaskSpec&) const = default;
};

void to_json(json& j, const TaskSpec& s);
void from_json(const json& j, TaskSpec& s);

enum class ModelTier { Lite, Complex };

/// Normalized downstream performance in [0, 1]. Missing cells are zero-filled
/// (a warning is appended when `warnings` is given).
double evaluate(const TimeSeriesFrame& frame, const TaskSpec& spec, ModelTier tier,
                std::vector<std::string>* warnings = nullptr);

double delta_perf(const TimeSeriesFrame& dirty, const TimeSeriesFrame& cleaned, const TaskSpec& spec, ModelTier tier);

/// Score formulas, exposed for tests.
double forecast_score(double nrmse, double cc);
double classify_score(double macro_f1, double auc);
double cluster_score(double silhouette, double dbi);

/// Metric helpers.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred);
/// One-vs-rest ROC-AUC averaged over classes; scores[i][c] ranks sample i for class index c.
double auc_ovr(const std::vector<int>& truth, const std::vector<std::vector<double>>& scores,
               const std::vector<int>& classes);
double silhouette(const std::vector<std::vector<double>>& points, const std::vector<int>& assign);
double davies_bouldin(const std::vector<std::vector<double>>& points, const std::vector<int>& assign);

/// Lloyd's k-means with k-means++ seeding; returns assignments of the best of `restarts` runs.
std::vector<int> kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::size_t restarts,
                        std::uint64_t seed);

}  // namespace tsclean
