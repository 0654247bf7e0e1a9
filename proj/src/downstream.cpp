#include "tsclean/downstream.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "tsclean/stats.hpp"

namespace tsclean {

namespace {

using Matrix = std::vector<std::vector<double>>;  // [row][col]
using Point = std::vector<double>;

constexpr std::size_t kLiteLags = 8;
constexpr std::size_t kComplexLags = 24;
constexpr std::size_t kLiteDownsample = 16;
constexpr std::size_t kComplexNeighbours = 5;
constexpr std::size_t kComplexRestarts = 10;

Matrix dense(const TimeSeriesFrame& f, std::vector<std::string>* warnings) {
    Matrix m(f.rows(), std::vector<double>(f.cols(), 0.0));
    std::size_t filled = 0;
    for (std::size_t t = 0; t < f.rows(); ++t)
        for (std::size_t d = 0; d < f.cols(); ++d) {
            if (f.missing(t, d)) ++filled;
            else m[t][d] = f.value(t, d);
        }
    if (filled > 0 && warnings)
        warnings->push_back("downstream evaluation zero-filled " + std::to_string(filled) + " Missing cells");
    return m;
}

// Ridge least squares; the penalty is relative to the mean diagonal of X'X.
Eigen::MatrixXd ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double rel_lambda) {
    Eigen::MatrixXd A = X.transpose() * X;
    const double lambda = rel_lambda * std::max(A.trace() / static_cast<double>(A.rows()), 1e-12);
    A.diagonal().array() += lambda;
    return A.ldlt().solve(X.transpose() * Y);
}

double dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double forecast_perf(const Matrix& x, const TaskSpec& spec, ModelTier tier) {
    const std::size_t T = x.size(), D = x.empty() ? 0 : x[0].size();
    const std::size_t test_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.test_frac * static_cast<double>(T))));
    const std::size_t h = spec.horizon;
    const std::size_t lags = tier == ModelTier::Lite ? kLiteLags : kComplexLags;
    if (T < test_n + lags + h) throw DataError("series too short for forecasting evaluation");
    const std::size_t train_end = T - test_n;
    const std::size_t first = lags + h - 1;  // first predictable row
    if (train_end <= first) throw DataError("series too short for forecasting evaluation");
    const std::size_t n_train = train_end - first;

    // predictions[t - train_end][d]
    Matrix pred(test_n, std::vector<double>(D, 0.0));
    if (tier == ModelTier::Lite) {
        for (std::size_t d = 0; d < D; ++d) {
            Eigen::MatrixXd X(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(lags + 1));
            Eigen::MatrixXd y(static_cast<Eigen::Index>(n_train), 1);
            auto row = [&](std::size_t t, auto&& out) {
                for (std::size_t l = 0; l < lags; ++l) out(static_cast<Eigen::Index>(l)) = x[t - h - l][d];
                out(static_cast<Eigen::Index>(lags)) = 1.0;
            };
            for (std::size_t i = 0; i < n_train; ++i) {
                row(first + i, X.row(static_cast<Eigen::Index>(i)));
                y(static_cast<Eigen::Index>(i), 0) = x[first + i][d];
            }
            const Eigen::MatrixXd w = ridge(X, y, 1e-8);
            Eigen::RowVectorXd r(static_cast<Eigen::Index>(lags + 1));
            for (std::size_t i = 0; i < test_n; ++i) {
                row(train_end + i, r);
                pred[i][d] = (r * w)(0, 0);
            }
        }
    } else {
        const std::size_t p = lags * D + 1;
        Eigen::MatrixXd X(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(p));
        Eigen::MatrixXd Y(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(D));
        auto row = [&](std::size_t t, auto&& out) {
            for (std::size_t l = 0; l < lags; ++l)
                for (std::size_t e = 0; e < D; ++e) out(static_cast<Eigen::Index>(l * D + e)) = x[t - h - l][e];
            out(static_cast<Eigen::Index>(p - 1)) = 1.0;
        };
        for (std::size_t i = 0; i < n_train; ++i) {
            row(first + i, X.row(static_cast<Eigen::Index>(i)));
            for (std::size_t d = 0; d < D; ++d) Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = x[first + i][d];
        }
        const Eigen::MatrixXd W = ridge(X, Y, 1e-3);
        Eigen::RowVectorXd r(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < test_n; ++i) {
            row(train_end + i, r);
            const Eigen::RowVectorXd out = r * W;
            for (std::size_t d = 0; d < D; ++d) pred[i][d] = out(static_cast<Eigen::Index>(d));
        }
    }

    double total = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        std::vector<double> truth(test_n), yhat(test_n);
        double se = 0.0;
        for (std::size_t i = 0; i < test_n; ++i) {
            truth[i] = x[train_end + i][d];
            yhat[i] = pred[i][d];
            se += (truth[i] - yhat[i]) * (truth[i] - yhat[i]);
        }
        const double rmse = std::sqrt(se / static_cast<double>(test_n));
        const double sd = std::sqrt(stats::pvariance(truth));
        const double nrmse = sd > 0.0 ? rmse / sd : (rmse > 0.0 ? rmse : 0.0);
        double cc = stats::pearson(yhat, truth);
        // a constant truth carries no correlation signal; cc stays 0 so flattening data never pays
        if (!std::isfinite(cc)) cc = 0.0;
        total += forecast_score(nrmse, cc);
    }
    return total / static_cast<double>(D);
}

// One point per sample: the sample's rows for every variable, variable-major.
std::vector<Matrix> samples_of(const Matrix& x, std::size_t len) {
    const std::size_t n = x.size() / len;
    const std::size_t D = x.empty() ? 0 : x[0].size();
    std::vector<Matrix> out(n, Matrix(D, std::vector<double>(len)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t)
            for (std::size_t d = 0; d < D; ++d) out[i][d][t] = x[i * len + t][d];
    return out;
}

Point downsampled(const Matrix& s, std::size_t points) {
    Point p;
    for (const auto& series : s) {
        const std::size_t m = std::min(points, series.size());
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t lo = k * series.size() / m, hi = (k + 1) * series.size() / m;
            double sum = 0.0;
            for (std::size_t t = lo; t < hi; ++t) sum += series[t];
            p.push_back(sum / static_cast<double>(hi - lo));
        }
    }
    return p;
}

Point znormalized(const Matrix& s) {
    Point p;
    for (const auto& series : s) {
        const double m = stats::mean(series);
        const double sd = std::sqrt(stats::pvariance(series));
        for (double v : series) p.push_back(sd > 0.0 ? (v - m) / sd : 0.0);
    }
    return p;
}

Point summary_stats(const Matrix& s) {
    Point p;
    for (const auto& series : s) {
        const double m = stats::mean(series);
        const double sd = std::sqrt(stats::pvariance(series));
        const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
        double lag1 = 0.0, mad_diff = 0.0;
        for (std::size_t t = 1; t < series.size(); ++t) {
            lag1 += (series[t] - m) * (series[t - 1] - m);
            mad_diff += std::abs(series[t] - series[t - 1]);
        }
        const double var_sum = sd * sd * static_cast<double>(series.size());
        p.insert(p.end(), {m, sd, *lo, *hi, sd > 0.0 ? stats::skewness(series) : 0.0,
                           sd > 0.0 ? stats::excess_kurtosis(series) : 0.0, var_sum > 0.0 ? lag1 / var_sum : 0.0,
                           mad_diff / static_cast<double>(std::max<std::size_t>(1, series.size() - 1))});
    }
    return p;
}

// Each feature scaled to zero mean / unit variance across points.
void standardize_columns(std::vector<Point>& pts) {
    if (pts.empty()) return;
    for (std::size_t j = 0; j < pts[0].size(); ++j) {
        std::vector<double> col;
        for (const auto& p : pts) col.push_back(p[j]);
        const double m = stats::mean(col), sd = std::sqrt(stats::pvariance(col));
        for (auto& p : pts) p[j] = sd > 0.0 ? (p[j] - m) / sd : 0.0;
    }
}

struct Split {
    std::vector<std::size_t> train, test;
};

Split stratified_split(const std::vector<int>& labels, double test_frac, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    Split s;
    for (auto& [label, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(idx.size())));
        if (n_test >= idx.size()) n_test = idx.size() - 1;
        s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<long>(n_test));
        s.train.insert(s.train.end(), idx.begin() + static_cast<long>(n_test), idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

bool covers_classes(const Split& s, const std::vector<int>& labels) {
    std::set<int> all(labels.begin(), labels.end()), seen;
    for (auto i : s.train) seen.insert(labels[i]);
    return seen == all && !s.test.empty();
}

double classify_perf(const Matrix& x, const TaskSpec& spec, ModelTier tier) {
    const auto samples = samples_of(x, spec.series_length);
    std::vector<Point> pts;
    for (const auto& s : samples) pts.push_back(tier == ModelTier::Lite ? downsampled(s, kLiteDownsample) : znormalized(s));

    Split split = stratified_split(spec.labels, spec.test_frac, spec.seed);
    if (!covers_classes(split, spec.labels)) split = stratified_split(spec.labels, spec.test_frac, spec.seed + 1);
    if (!covers_classes(split, spec.labels)) throw DataError("degenerate classification split: a class is absent from training");

    const std::set<int> class_set(spec.labels.begin(), spec.labels.end());
    const std::vector<int> classes(class_set.begin(), class_set.end());
    std::vector<int> truth, pred;
    std::vector<std::vector<double>> scores;
    for (auto i : split.test) {
        std::vector<std::pair<double, int>> nb;  // (distance, label)
        for (auto j : split.train) nb.push_back({dist(pts[i], pts[j]), spec.labels[j]});
        std::vector<double> sc(classes.size(), 0.0);
        if (tier == ModelTier::Lite) {
            std::vector<double> best(classes.size(), std::numeric_limits<double>::infinity());
            for (const auto& [dd, lab] : nb) {
                const auto c = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), lab) - classes.begin());
                best[c] = std::min(best[c], dd);
            }
            for (std::size_t c = 0; c < classes.size(); ++c) sc[c] = -best[c];
        } else {
            const std::size_t k = std::min(kComplexNeighbours, nb.size());
            std::partial_sort(nb.begin(), nb.begin() + static_cast<long>(k), nb.end());
            double total = 0.0;
            for (std::size_t n = 0; n < k; ++n) {
                const auto c = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), nb[n].second) - classes.begin());
                const double w = 1.0 / (nb[n].first + 1e-9);
                sc[c] += w;
                total += w;
            }
            for (double& v : sc) v /= total;
        }
        const auto arg = static_cast<std::size_t>(std::max_element(sc.begin(), sc.end()) - sc.begin());
        truth.push_back(spec.labels[i]);
        pred.push_back(classes[arg]);
        scores.push_back(sc);
    }
    return classify_score(macro_f1(truth, pred), auc_ovr(truth, scores, classes));
}

double cluster_perf(const Matrix& x, const TaskSpec& spec, ModelTier tier) {
    const auto samples = samples_of(x, spec.series_length);
    std::vector<Point> pts;
    for (const auto& s : samples) pts.push_back(tier == ModelTier::Lite ? summary_stats(s) : znormalized(s));
    if (tier == ModelTier::Lite) standardize_columns(pts);
    const auto assign = kmeans(pts, spec.k, tier == ModelTier::Lite ? 1 : kComplexRestarts, spec.seed);
    return cluster_score(silhouette(pts, assign), davies_bouldin(pts, assign));
}

std::vector<Point> centroids_of(const std::vector<Point>& pts, const std::vector<int>& assign, std::size_t k) {
    std::vector<Point> c(k, Point(pts[0].size(), 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto a = static_cast<std::size_t>(assign[i]);
        ++count[a];
        for (std::size_t j = 0; j < pts[i].size(); ++j) c[a][j] += pts[i][j];
    }
    for (std::size_t a = 0; a < k; ++a)
        if (count[a])
            for (double& v : c[a]) v /= static_cast<double>(count[a]);
    return c;
}

}  // namespace

std::size_t TaskSpec::sample_count(std::size_t rows) const { return series_length ? rows / series_length : 0; }

void TaskSpec::validate(std::size_t rows) const {
    if (!(test_frac > 0.0 && test_frac < 1.0)) throw std::invalid_argument("test_frac must lie in (0, 1)");
    switch (kind) {
        case TaskKind::Forecast:
            if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
            break;
        case TaskKind::Classify:
            if (series_length < 2 || rows % series_length != 0)
                throw std::invalid_argument("series_length must divide the row count");
            if (labels.size() != sample_count(rows)) throw std::invalid_argument("labels do not align with samples");
            break;
        case TaskKind::Cluster:
            if (series_length < 2 || rows % series_length != 0)
                throw std::invalid_argument("series_length must divide the row count");
            if (k < 2 || k > sample_count(rows)) throw std::invalid_argument("k must lie in [2, samples]");
            break;
    }
}

void to_json(json& j, const TaskSpec& s) {
    j = json{{"task", to_string(s.kind)}, {"seed", s.seed}, {"test_frac", s.test_frac}};
    switch (s.kind) {
        case TaskKind::Forecast: j["horizon"] = s.horizon; break;
        case TaskKind::Classify:
            j["series_length"] = s.series_length;
            j["labels"] = s.labels;
            break;
        case TaskKind::Cluster:
            j["series_length"] = s.series_length;
            j["k"] = s.k;
            break;
    }
}

void from_json(const json& j, TaskSpec& s) {
    s = TaskSpec{};
    s.kind = task_kind_from_string(j.at("task").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    s.test_frac = j.value("test_frac", 0.2);
    s.horizon = j.value("horizon", std::size_t{1});
    s.series_length = j.value("series_length", std::size_t{0});
    if (j.contains("labels")) s.labels = j.at("labels").get<std::vector<int>>();
    s.k = j.value("k", std::size_t{3});
}

double forecast_score(double nrmse, double cc) { return (std::exp(-nrmse) + (std::clamp(cc, -1.0, 1.0) + 1.0) / 2.0) / 2.0; }
double classify_score(double f1, double auc) { return (f1 + auc) / 2.0; }
double cluster_score(double sil, double dbi) { return ((std::clamp(sil, -1.0, 1.0) + 1.0) / 2.0 + 1.0 / (1.0 + dbi)) / 2.0; }

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
    std::set<int> classes(truth.begin(), truth.end());
    if (classes.empty()) return 0.0;
    double total = 0.0;
    for (int c : classes) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == c && truth[i] == c) ++tp;
            else if (pred[i] == c) ++fp;
            else if (truth[i] == c) ++fn;
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        total += p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    }
    return total / static_cast<double>(classes.size());
}

double auc_ovr(const std::vector<int>& truth, const std::vector<std::vector<double>>& scores,
               const std::vector<int>& classes) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<std::pair<double, bool>> v;
        for (std::size_t i = 0; i < truth.size(); ++i) v.push_back({scores[i][c], truth[i] == classes[c]});
        const auto pos = static_cast<double>(std::count_if(v.begin(), v.end(), [](auto& p) { return p.second; }));
        const double neg = static_cast<double>(v.size()) - pos;
        if (pos == 0 || neg == 0) continue;
        std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
        // Mann-Whitney with average ranks for ties
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < v.size();) {
            std::size_t j = i;
            while (j < v.size() && v[j].first == v[i].first) ++j;
            const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
            for (std::size_t k = i; k < j; ++k)
                if (v[k].second) rank_sum += avg;
            i = j;
        }
        total += (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
        ++used;
    }
    return used ? total / static_cast<double>(used) : 0.5;
}

double silhouette(const std::vector<Point>& pts, const std::vector<int>& assign) {
    const int k = assign.empty() ? 0 : *std::max_element(assign.begin(), assign.end()) + 1;
    std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++size[static_cast<std::size_t>(a)];
    if (std::count_if(size.begin(), size.end(), [](std::size_t s) { return s > 0; }) < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto own = static_cast<std::size_t>(assign[i]);
        if (size[own] <= 1) continue;  // singleton: s = 0
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) sum[static_cast<std::size_t>(assign[j])] += dist(pts[i], pts[j]);
        const double a = sum[own] / static_cast<double>(size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < size.size(); ++c)
            if (c != own && size[c] > 0) b = std::min(b, sum[c] / static_cast<double>(size[c]));
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(pts.size());
}

double davies_bouldin(const std::vector<Point>& pts, const std::vector<int>& assign) {
    const std::size_t k = assign.empty() ? 0 : static_cast<std::size_t>(*std::max_element(assign.begin(), assign.end()) + 1);
    const auto cent = centroids_of(pts, assign, k);
    std::vector<double> scatter(k, 0.0);
    std::vector<std::size_t> size(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto a = static_cast<std::size_t>(assign[i]);
        scatter[a] += dist(pts[i], cent[a]);
        ++size[a];
    }
    std::vector<std::size_t> live;
    for (std::size_t a = 0; a < k; ++a)
        if (size[a]) {
            scatter[a] /= static_cast<double>(size[a]);
            live.push_back(a);
        }
    if (live.size() < 2) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (auto a : live) {
        double worst = 0.0;
        for (auto b : live) {
            if (a == b) continue;
            const double m = dist(cent[a], cent[b]);
            worst = std::max(worst, m > 0.0 ? (scatter[a] + scatter[b]) / m : std::numeric_limits<double>::infinity());
        }
        total += worst;
    }
    return total / static_cast<double>(live.size());
}

std::vector<int> kmeans(const std::vector<Point>& pts, std::size_t k, std::size_t restarts, std::uint64_t seed) {
    const std::size_t n = pts.size();
    if (k < 1 || k > n) throw std::invalid_argument("k must lie in [1, samples]");
    std::vector<int> best_assign(n, 0);
    double best_inertia = std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < std::max<std::size_t>(1, restarts); ++run) {
        std::mt19937_64 rng(seed * 1000003ULL + run);
        // k-means++ seeding
        std::vector<Point> cent;
        cent.push_back(pts[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
        std::vector<double> d2(n);
        while (cent.size() < k) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& c : cent) m = std::min(m, dist(pts[i], c));
                d2[i] = m * m;
                sum += d2[i];
            }
            if (sum <= 0.0) {
                cent.push_back(pts[cent.size() % n]);
                continue;
            }
            double r = std::uniform_real_distribution<double>(0.0, sum)(rng);
            std::size_t pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                r -= d2[i];
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
            }
            cent.push_back(pts[pick]);
        }
        std::vector<int> assign(n, -1);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                int arg = 0;
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    const double dd = dist(pts[i], cent[c]);
                    if (dd < m) {
                        m = dd;
                        arg = static_cast<int>(c);
                    }
                }
                if (assign[i] != arg) {
                    assign[i] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            auto next = centroids_of(pts, assign, k);
            for (std::size_t c = 0; c < k; ++c)
                if (std::count(assign.begin(), assign.end(), static_cast<int>(c)) == 0) next[c] = cent[c];
            cent = std::move(next);
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = dist(pts[i], cent[static_cast<std::size_t>(assign[i])]);
            inertia += dd * dd;
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best_assign = assign;
        }
    }
    return best_assign;
}

double evaluate(const TimeSeriesFrame& frame, const TaskSpec& spec, ModelTier tier, std::vector<std::string>* warnings) {
    spec.validate(frame.rows());
    const Matrix x = dense(frame, warnings);
    double perf = 0.0;
    switch (spec.kind) {
        case TaskKind::Forecast: perf = forecast_perf(x, spec, tier); break;
        case TaskKind::Classify: perf = classify_perf(x, spec, tier); break;
        case TaskKind::Cluster: perf = cluster_perf(x, spec, tier); break;
    }
    return std::clamp(perf, 0.0, 1.0);
}

double delta_perf(const TimeSeriesFrame& dirty, const TimeSeriesFrame& cleaned, const TaskSpec& spec, ModelTier tier) {
    return evaluate(cleaned, spec, tier) - evaluate(dirty, spec, tier);
}

}  // namespace tsclean
