#include "petition/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "petition/errors.hpp"
#include "petition/eval.hpp"
#include "petition/rng.hpp"
#include "petition/tensor.hpp"

namespace petition::baselines {

using text::SparseVector;

namespace {

std::size_t common_dim(std::span<const SparseVector> x, const char *what) {
    if (x.empty()) throw ValidationError(std::string(what) + ": empty design matrix");
    const std::size_t dim = x.front().dim();
    for (const auto &row : x) {
        if (row.dim() != dim) throw ValidationError(std::string(what) + ": rows of different dimension");
    }
    return dim;
}

void check_targets(std::span<const double> y, std::size_t rows, const char *what) {
    if (y.size() != rows) {
        throw ValidationError(std::string(what) + ": " + std::to_string(rows) + " rows but " + std::to_string(y.size()) +
                              " targets");
    }
    for (const double v : y) {
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite target");
    }
}

double sparse_dot(const SparseVector &x, std::span<const double> w) {
    double s = 0.0;
    for (const auto &[j, v] : x.entries()) s += v * w[j];
    return s;
}

double squared_distance(const SparseVector &a, double a2, const SparseVector &b, double b2) {
    return std::max(0.0, a2 + b2 - 2.0 * a.dot(b));
}

Eigen::MatrixXd distance_matrix(std::span<const SparseVector> rows, std::span<const SparseVector> cols) {
    std::vector<double> r2(rows.size()), c2(cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) r2[i] = rows[i].squared_norm();
    for (std::size_t j = 0; j < cols.size(); ++j) c2[j] = cols[j].squared_norm();
    Eigen::MatrixXd d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                squared_distance(rows[i], r2[i], cols[j], c2[j]);
        }
    }
    return d;
}

/// Symmetric version: exact zeros on the diagonal and mirrored entries.
Eigen::MatrixXd gram_distances(std::span<const SparseVector> rows) {
    std::vector<double> r2(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) r2[i] = rows[i].squared_norm();
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
            d(i, j) = d(j, i) = squared_distance(rows[ui], r2[ui], rows[uj], r2[uj]);
        }
    }
    return d;
}

Eigen::MatrixXd kernel_from_distances(const Eigen::MatrixXd &d, double sigma) {
    return (-d.array() / (2.0 * sigma * sigma)).exp().matrix();
}

Eigen::VectorXd solve_dual(const Eigen::MatrixXd &k, const Eigen::VectorXd &y, double lambda) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericError("kernel ridge: Cholesky factorisation failed at lambda=" + eval::fixed(lambda, 6) +
                           "; use a larger lambda");
    }
    Eigen::VectorXd alpha = llt.solve(y);
    if (!alpha.allFinite()) throw NumericError("kernel ridge: non-finite dual coefficients; use a larger lambda");
    return alpha;
}

std::vector<std::size_t> subsample(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (cap == 0 || n <= cap) return idx;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(idx));
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

double clamped(double v) { return std::max(v, 0.0); }

}  // namespace

MeanModel mean_predictor(std::span<const double> y) {
    if (y.empty()) throw ValidationError("mean_predictor: empty training set");
    check_targets(y, y.size(), "mean_predictor");
    return MeanModel{std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size())};
}

double RidgeModel::predict(const SparseVector &x) const {
    if (x.dim() != weights.size()) throw ValidationError("ridge_predict: input dimension mismatch");
    return intercept + sparse_dot(x, weights);
}

RidgeModel ridge_fit(std::span<const SparseVector> x, std::span<const double> y, double lambda, double tolerance) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("ridge_fit: lambda must be positive");
    const std::size_t p = common_dim(x, "ridge_fit");
    check_targets(y, x.size(), "ridge_fit");
    const std::size_t n = x.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> x_mean(p, 0.0), diag(p, 0.0);
    for (const auto &row : x) {
        for (const auto &[j, v] : row.entries()) {
            x_mean[j] += v * inv_n;
            diag[j] += v * v;
        }
    }
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) * inv_n;
    for (std::size_t j = 0; j < p; ++j) diag[j] = std::max(diag[j] - static_cast<double>(n) * x_mean[j] * x_mean[j], 0.0) + lambda;

    // (Xc'Xc + lambda I) v, using that Xc v sums to zero.
    std::vector<double> u(n);
    auto apply = [&](std::span<const double> v, std::span<double> out) {
        const double shift = nn::dot(x_mean, v);
        for (std::size_t i = 0; i < n; ++i) u[i] = sparse_dot(x[i], v) - shift;
        for (std::size_t j = 0; j < p; ++j) out[j] = lambda * v[j];
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto &[j, val] : x[i].entries()) out[j] += val * u[i];
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += u[i];
        if (total != 0.0) nn::axpy(-total, x_mean, out);
    };

    std::vector<double> b(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double yc = y[i] - y_mean;
        for (const auto &[j, v] : x[i].entries()) b[j] += v * yc;
    }
    const double b_norm = std::sqrt(nn::dot(b, b));
    const double stop = tolerance * std::max(1.0, b_norm);

    RidgeModel m;
    m.lambda = lambda;
    m.weights.assign(p, 0.0);
    std::vector<double> r = b, z(p), d(p), ad(p);
    for (std::size_t j = 0; j < p; ++j) z[j] = r[j] / diag[j];
    d = z;
    double rz = nn::dot(r, z);
    const std::size_t max_iter = std::max<std::size_t>(1000, 10 * p);
    for (std::size_t it = 0; it < max_iter && std::sqrt(nn::dot(r, r)) > stop; ++it) {
        apply(d, ad);
        const double dad = nn::dot(d, ad);
        if (!(dad > 0.0)) break;
        const double step = rz / dad;
        nn::axpy(step, d, m.weights);
        nn::axpy(-step, ad, r);
        for (std::size_t j = 0; j < p; ++j) z[j] = r[j] / diag[j];
        const double rz_next = nn::dot(r, z);
        for (std::size_t j = 0; j < p; ++j) d[j] = z[j] + (rz_next / rz) * d[j];
        rz = rz_next;
        m.iterations = it + 1;
    }

    apply(m.weights, ad);
    double res = 0.0;
    for (std::size_t j = 0; j < p; ++j) res += (ad[j] - b[j]) * (ad[j] - b[j]);
    m.residual = std::sqrt(res);
    if (!std::isfinite(m.residual)) throw NumericError("ridge_fit: solver diverged");
    m.intercept = y_mean - nn::dot(x_mean, m.weights);
    return m;
}

GiLexicon parse_gi_lexicon(std::string_view content, const std::string &source) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::set<std::string> names;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t end = std::min(content.find('\n', pos), content.size());
        std::string line(content.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') {
            if (end == content.size()) break;
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw FormatError(source, line_no, "expected word<TAB>category");
        }
        std::string word = line.substr(0, tab);
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        std::string category = line.substr(tab + 1);
        names.insert(category);
        pairs.emplace_back(std::move(word), std::move(category));
        if (end == content.size()) break;
    }
    if (pairs.empty()) throw ValidationError(source + ": lexicon has no entries");

    GiLexicon lex;
    lex.categories.assign(names.begin(), names.end());
    for (const auto &[word, category] : pairs) {
        const auto c = static_cast<std::size_t>(
            std::lower_bound(lex.categories.begin(), lex.categories.end(), category) - lex.categories.begin());
        auto &cats = lex.word_categories[word];
        if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
    }
    return lex;
}

GiLexicon load_gi_lexicon(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open lexicon '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_gi_lexicon(buffer.str(), path.string());
}

std::vector<double> gi_features(std::span<const std::string> tokens, const GiLexicon &lexicon) {
    std::vector<double> out(lexicon.categories.size(), 0.0);
    if (tokens.empty()) return out;
    for (const auto &t : tokens) {
        const auto it = lexicon.word_categories.find(t);
        if (it == lexicon.word_categories.end()) continue;
        for (const std::size_t c : it->second) out[c] += 1.0;
    }
    for (double &v : out) v /= static_cast<double>(tokens.size());
    return out;
}

double rbf_kernel(const SparseVector &a, const SparseVector &b, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("rbf_kernel: sigma must be positive");
    if (a.dim() != b.dim()) throw ValidationError("rbf_kernel: dimension mismatch");
    return std::exp(-squared_distance(a, a.squared_norm(), b, b.squared_norm()) / (2.0 * sigma * sigma));
}

double KernelRidgeModel::predict(const SparseVector &x) const {
    const double x2 = x.squared_norm();
    double s = offset;
    for (std::size_t j = 0; j < support.size(); ++j) {
        if (support[j].dim() != x.dim()) throw ValidationError("krr_predict: input dimension mismatch");
        s += alpha[j] * std::exp(-squared_distance(x, x2, support[j], support[j].squared_norm()) / (2.0 * sigma * sigma));
    }
    return s;
}

KernelRidgeModel krr_fit(std::span<const SparseVector> x, std::span<const double> y, double sigma, double lambda,
                         const KrrOptions &options) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("krr_fit: sigma must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("krr_fit: lambda must be positive");
    common_dim(x, "krr_fit");
    check_targets(y, x.size(), "krr_fit");

    KernelRidgeModel m;
    m.sigma = sigma;
    m.lambda = lambda;
    const auto idx = subsample(x.size(), options.cap, options.seed);
    Eigen::VectorXd target(static_cast<Eigen::Index>(idx.size()));
    m.support.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        m.support.push_back(x[idx[i]]);
        target(static_cast<Eigen::Index>(i)) = y[idx[i]];
    }
    if (options.center_targets) {
        m.offset = target.mean();
        target.array() -= m.offset;
    }
    const Eigen::VectorXd alpha = solve_dual(kernel_from_distances(gram_distances(m.support), sigma), target, lambda);
    m.alpha.assign(alpha.data(), alpha.data() + alpha.size());
    return m;
}

double median_heuristic(std::span<const SparseVector> x, std::size_t max_points, std::uint64_t seed) {
    const auto idx = subsample(x.size(), max_points, seed);
    std::vector<double> dist;
    dist.reserve(idx.size() * (idx.size() - (idx.empty() ? 0 : 1)) / 2);
    std::vector<double> sq(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) sq[i] = x[idx[i]].squared_norm();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            dist.push_back(std::sqrt(squared_distance(x[idx[i]], sq[i], x[idx[j]], sq[j])));
        }
    }
    if (dist.empty()) return 1.0;
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    return *mid > 0.0 ? *mid : 1.0;
}

std::vector<double> OrdinalLogisticModel::probabilities(const SparseVector &x) const {
    std::vector<double> p;
    p.reserve(heads.size());
    for (const auto &h : heads) {
        const double z = h.intercept + sparse_dot(x, h.weights);
        p.push_back(z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)));
    }
    return p;
}

std::size_t OrdinalLogisticModel::level(const SparseVector &x) const {
    const auto p = probabilities(x);
    std::size_t l = 0;
    while (l < p.size() && p[l] >= 0.5) ++l;
    return l;
}

double OrdinalLogisticModel::representative_count(const SparseVector &x) const {
    const std::size_t l = level(x);
    const double lo = l == 0 ? 1.0 : static_cast<double>(thresholds[l - 1]);
    const double hi = l == thresholds.size() ? 10.0 * static_cast<double>(thresholds.back())
                                             : static_cast<double>(thresholds[l]);
    return std::sqrt(lo * hi);
}

OrdinalLogisticModel ordinal_logistic_fit(std::span<const SparseVector> x,
                                          std::span<const std::vector<std::uint8_t>> bits,
                                          const corpus::OrdinalScheme &scheme, double lambda,
                                          std::size_t iterations) {
    const std::size_t p = common_dim(x, "ordinal_logistic_fit");
    if (bits.size() != x.size()) throw ValidationError("ordinal_logistic_fit: label count mismatch");
    if (!(lambda > 0.0)) throw ValidationError("ordinal_logistic_fit: lambda must be positive");
    const std::size_t n = x.size();
    const std::size_t k = scheme.size();
    for (const auto &b : bits) {
        if (b.size() != k) throw ValidationError("ordinal_logistic_fit: bit vector does not match scheme");
    }

    double max_sq = 0.0;
    for (const auto &row : x) max_sq = std::max(max_sq, row.squared_norm() + 1.0);
    const double step = 1.0 / (0.25 * max_sq + lambda);

    OrdinalLogisticModel model;
    model.thresholds = scheme.thresholds();
    std::vector<double> grad(p), z(n);
    for (std::size_t t = 0; t < k; ++t) {
        // Nesterov-accelerated gradient descent on the mean log-loss.
        std::vector<double> w(p, 0.0), w_prev(p, 0.0), look(p, 0.0);
        double b = 0.0, b_prev = 0.0;
        for (std::size_t it = 0; it < iterations; ++it) {
            const double momentum = static_cast<double>(it) / static_cast<double>(it + 3);
            for (std::size_t j = 0; j < p; ++j) look[j] = w[j] + momentum * (w[j] - w_prev[j]);
            const double b_look = b + momentum * (b - b_prev);
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = b_look + sparse_dot(x[i], look);
                const double prob = s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
                const double err = (prob - static_cast<double>(bits[i][t])) / static_cast<double>(n);
                grad_b += err;
                for (const auto &[j, v] : x[i].entries()) grad[j] += err * v;
            }
            w_prev = w;
            b_prev = b;
            for (std::size_t j = 0; j < p; ++j) w[j] = look[j] - step * (grad[j] + lambda * look[j]);
            b = b_look - step * grad_b;
        }
        for (const double v : w) {
            if (!std::isfinite(v)) throw NumericError("ordinal_logistic_fit: diverged");
        }
        model.heads.push_back(LogisticHead{std::move(w), b});
    }
    return model;
}

namespace {

struct Selected {
    double lambda = 0.0;
    double sigma = 0.0;
    double dev_mae = std::numeric_limits<double>::infinity();
    std::vector<double> test;
};

std::vector<double> clamp_all(std::vector<double> v) {
    for (double &x : v) x = clamped(x);
    return v;
}

BaselinePrediction finish(std::string name, const Selected &s, corpus::LogBase base) {
    BaselinePrediction p;
    p.name = std::move(name);
    p.lambda = s.lambda;
    p.sigma = s.sigma;
    p.dev_mae = s.dev_mae;
    p.test_log = clamp_all(s.test);
    p.test_counts.reserve(p.test_log.size());
    for (const double v : p.test_log) p.test_counts.push_back(corpus::inverse_log_target(v, base));
    return p;
}

/// Dev set for model selection; the training rows stand in when dev is empty.
struct SelectionSet {
    std::span<const SparseVector> x;
    std::span<const double> y;
};

Selected select_ridge(std::span<const SparseVector> train, std::span<const double> y_train, SelectionSet dev,
                      std::span<const SparseVector> test, const SuiteOptions &options) {
    Selected best;
    std::optional<RidgeModel> best_model;
    for (const double lambda : options.lambda_grid) {
        auto m = ridge_fit(train, y_train, lambda);
        std::vector<double> pred;
        pred.reserve(dev.x.size());
        for (const auto &row : dev.x) pred.push_back(clamped(m.predict(row)));
        const double err = eval::mae(pred, dev.y);
        if (err < best.dev_mae) {
            best.dev_mae = err;
            best.lambda = lambda;
            best_model = std::move(m);
        }
    }
    for (const auto &row : test) best.test.push_back(best_model->predict(row));
    return best;
}

Selected select_krr(std::span<const SparseVector> train, std::span<const double> y_train, SelectionSet dev,
                    std::span<const SparseVector> test, const SuiteOptions &options) {
    const auto idx = subsample(train.size(), options.krr_cap, options.seed);
    std::vector<SparseVector> support;
    support.reserve(idx.size());
    Eigen::VectorXd target(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        support.push_back(train[idx[i]]);
        target(static_cast<Eigen::Index>(i)) = y_train[idx[i]];
    }
    const double offset = target.mean();
    target.array() -= offset;

    const double sigma0 = median_heuristic(support, 1000, options.seed + 1);
    const Eigen::MatrixXd d_train = gram_distances(support);
    const Eigen::MatrixXd d_dev = distance_matrix(dev.x, support);
    const Eigen::MatrixXd d_test = distance_matrix(test, support);

    Selected best;
    Eigen::VectorXd best_alpha;
    std::optional<NumericError> last_failure;
    for (const double mult : options.sigma_multipliers) {
        const double sigma = sigma0 * mult;
        const Eigen::MatrixXd k = kernel_from_distances(d_train, sigma);
        const Eigen::MatrixXd k_dev = kernel_from_distances(d_dev, sigma);
        for (const double lambda : options.lambda_grid) {
            Eigen::VectorXd alpha;
            try {
                alpha = solve_dual(k, target, lambda);
            } catch (const NumericError &e) {
                last_failure = e;
                continue;
            }
            const Eigen::VectorXd pred = ((k_dev * alpha).array() + offset).max(0.0).matrix();
            const double err = eval::mae(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())), dev.y);
            if (err < best.dev_mae) {
                best.dev_mae = err;
                best.lambda = lambda;
                best.sigma = sigma;
                best_alpha = alpha;
            }
        }
    }
    if (best_alpha.size() == 0) {
        if (last_failure) throw *last_failure;
        throw NumericError("kernel ridge: no grid point produced a model");
    }
    const Eigen::VectorXd pred = (kernel_from_distances(d_test, best.sigma) * best_alpha).array() + offset;
    best.test.assign(pred.data(), pred.data() + pred.size());
    return best;
}

std::vector<SparseVector> concat_rows(std::span<const SparseVector> a, std::span<const SparseVector> b) {
    std::vector<SparseVector> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        // Rescale so the feature block has about the norm of a TF-IDF row.
        const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(b[i].dim(), 1)));
        auto entries = b[i].entries();
        for (auto &[j, v] : entries) v *= scale;
        out.push_back(SparseVector::concat(a[i], SparseVector(b[i].dim(), std::move(entries))));
    }
    return out;
}

}  // namespace

std::vector<BaselinePrediction> baseline_suite(const SplitDesign &train, const SplitDesign &dev,
                                               const SplitDesign &test, std::span<const double> y_train,
                                               std::span<const double> y_dev,
                                               std::span<const std::vector<std::uint8_t>> bits_train,
                                               const corpus::OrdinalScheme &scheme, corpus::LogBase base,
                                               const SuiteOptions &options) {
    if (train.bow.empty()) throw ValidationError("baseline_suite: empty training split");
    check_targets(y_train, train.bow.size(), "baseline_suite");
    check_targets(y_dev, dev.bow.size(), "baseline_suite");
    const bool has_dev = !dev.bow.empty();
    auto selection = [&](const std::vector<SparseVector> &train_rows, const std::vector<SparseVector> &dev_rows) {
        return has_dev ? SelectionSet{dev_rows, y_dev} : SelectionSet{train_rows, y_train};
    };

    std::vector<BaselinePrediction> out;

    const auto mean = mean_predictor(y_train);
    Selected m;
    const auto &y_sel = has_dev ? y_dev : y_train;
    m.dev_mae = eval::mae(std::vector<double>(y_sel.size(), mean.mean), y_sel);
    m.test.assign(test.bow.size(), mean.mean);
    out.push_back(finish("Mean", m, base));

    out.push_back(finish("Linear_BoW", select_ridge(train.bow, y_train, selection(train.bow, dev.bow), test.bow, options), base));
    if (!train.gi.empty()) {
        out.push_back(finish("Linear_GI", select_ridge(train.gi, y_train, selection(train.gi, dev.gi), test.gi, options), base));
    }

    if (options.run_krr) {
        out.push_back(finish("KRR_BoW", select_krr(train.bow, y_train, selection(train.bow, dev.bow), test.bow, options), base));
        if (!train.feat.empty()) {
            out.push_back(
                finish("KRR_feat", select_krr(train.feat, y_train, selection(train.feat, dev.feat), test.feat, options), base));
            const auto tr = concat_rows(train.bow, train.feat);
            const auto dv = concat_rows(dev.bow, dev.feat);
            const auto te = concat_rows(test.bow, test.feat);
            out.push_back(finish("KRR_BoW+feat", select_krr(tr, y_train, selection(tr, dv), te, options), base));
        }
    }

    if (options.run_ordinal) {
        const auto model = ordinal_logistic_fit(train.bow, bits_train, scheme, 1e-3);
        auto log_of = [&](const SparseVector &row) {
            return corpus::log_target(static_cast<std::int64_t>(std::llround(model.representative_count(row))), base);
        };
        BaselinePrediction p;
        p.name = "Ordinal_LR_BoW";
        p.lambda = 1e-3;
        const auto sel = selection(train.bow, dev.bow);
        std::vector<double> dev_pred;
        for (const auto &row : sel.x) dev_pred.push_back(log_of(row));
        p.dev_mae = eval::mae(dev_pred, sel.y);
        for (const auto &row : test.bow) {
            p.test_log.push_back(log_of(row));
            p.test_counts.push_back(model.representative_count(row));
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace petition::baselines
