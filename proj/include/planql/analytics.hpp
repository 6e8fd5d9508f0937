#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "planql/operators.hpp"
#include "planql/table.hpp"

namespace planql {

using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Small dense linear algebra, enough for the analytical operators.
// ---------------------------------------------------------------------------

namespace linalg {

struct EigenResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // vectors[k] is the k-th eigenvector
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Converges when
// the off-diagonal Frobenius norm drops below 1e-12, capped at 100 sweeps.
inline EigenResult jacobi_eigen(Matrix a) {
    const size_t n = a.size();
    Matrix v(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    auto off_norm = [&] {
        double s = 0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) s += a[i][j] * a[i][j];
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() >= 1e-12; ++sweep) {
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t x, size_t y) { return a[x][x] > a[y][y]; });

    EigenResult res;
    res.values.reserve(n);
    res.vectors.assign(n, std::vector<double>(n, 0.0));
    for (size_t k = 0; k < n; ++k) {
        res.values.push_back(a[order[k]][order[k]]);
        for (size_t i = 0; i < n; ++i) res.vectors[k][i] = v[i][order[k]];
    }
    return res;
}

// Gaussian elimination with partial pivoting; pivots below eps signal a
// rank-deficient system.
inline std::vector<double> gauss_solve(Matrix a, std::vector<double> b,
                                       double pivot_eps = 1e-10) {
    const size_t n = a.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < pivot_eps)
            fail("rank-deficient", "pivot " + std::to_string(a[pivot][col]) +
                                       " below threshold at column " + std::to_string(col));
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

} // namespace linalg

// ---------------------------------------------------------------------------
// Shared extraction: numeric matrix from number-typed columns, dropping
// rows that are null in any analyzed column.
// ---------------------------------------------------------------------------

namespace detail {

struct NumericBlock {
    std::vector<size_t> col_idx;
    std::vector<size_t> row_idx; // surviving rows, original order
    Matrix data;                 // data[i][j] = surviving row i, analyzed column j
};

inline NumericBlock extract_numeric(const Table& t, const std::vector<std::string>& columns) {
    NumericBlock block;
    for (const auto& name : columns) {
        size_t i = t.require_column(name);
        if (t.schema()[i].type != ColumnType::Number)
            fail("non-numeric-column", "column '" + name + "' has type " +
                                           to_string(t.schema()[i].type) +
                                           ", expected number");
        block.col_idx.push_back(i);
    }
    for (size_t r = 0; r < t.row_count(); ++r) {
        std::vector<double> vals;
        vals.reserve(block.col_idx.size());
        bool ok = true;
        for (size_t c : block.col_idx) {
            const Value& v = t.rows()[r][c];
            if (v.is_null()) {
                ok = false;
                break;
            }
            vals.push_back(v.as_number());
        }
        if (ok) {
            block.row_idx.push_back(r);
            block.data.push_back(std::move(vals));
        }
    }
    return block;
}

} // namespace detail

// ---------------------------------------------------------------------------
// pca
// ---------------------------------------------------------------------------

struct PcaResult {
    TablePtr projected;  // PC1..PCk plus pass-through of non-analyzed columns
    TablePtr components; // one row per component, loadings per analyzed column
    std::vector<double> explained_variance;
};

inline PcaResult pca(const Table& t, const std::vector<std::string>& columns, size_t k) {
    if (columns.empty()) fail("invalid-spec", "pca needs at least one column");
    if (k > columns.size())
        fail("k-too-large", "k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(columns.size()) + " analyzed columns");
    auto block = detail::extract_numeric(t, columns);
    const size_t n = block.data.size(), d = block.col_idx.size();
    if (n < 2)
        fail("insufficient-rows", "pca needs at least 2 rows without nulls, got " +
                                      std::to_string(n));

    std::vector<double> mean(d, 0.0);
    for (const auto& row : block.data)
        for (size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (auto& row : block.data)
        for (size_t j = 0; j < d; ++j) row[j] -= mean[j];

    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : block.data)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = i; j < d; ++j) cov[i][j] += row[i] * row[j];
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i; j < d; ++j) {
            cov[i][j] /= static_cast<double>(n - 1);
            cov[j][i] = cov[i][j];
        }

    auto eig = linalg::jacobi_eigen(cov);

    // Sign convention: the largest-magnitude loading of each component is
    // positive, which pins an otherwise arbitrary choice.
    for (size_t c = 0; c < k; ++c) {
        auto& vec = eig.vectors[c];
        size_t arg = 0;
        for (size_t i = 1; i < d; ++i)
            if (std::fabs(vec[i]) > std::fabs(vec[arg])) arg = i;
        if (vec[arg] < 0)
            for (auto& x : vec) x = -x;
    }

    // Projected table: PC columns, then pass-through of the columns that
    // were not analyzed, for the surviving rows.
    std::vector<size_t> pass;
    for (size_t c = 0; c < t.column_count(); ++c)
        if (std::find(block.col_idx.begin(), block.col_idx.end(), c) == block.col_idx.end())
            pass.push_back(c);

    std::vector<ColumnSpec> proj_schema;
    for (size_t c = 0; c < k; ++c)
        proj_schema.push_back({"PC" + std::to_string(c + 1), ColumnType::Number, ""});
    for (size_t c : pass) proj_schema.push_back(t.schema()[c]);

    std::vector<Row> proj_rows;
    proj_rows.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Row row;
        row.reserve(k + pass.size());
        for (size_t c = 0; c < k; ++c) {
            double score = 0;
            for (size_t j = 0; j < d; ++j) score += block.data[i][j] * eig.vectors[c][j];
            row.push_back(Value::number(score));
        }
        for (size_t c : pass) row.push_back(t.rows()[block.row_idx[i]][c]);
        proj_rows.push_back(std::move(row));
    }

    std::vector<ColumnSpec> comp_schema{{"component", ColumnType::Text, ""}};
    for (const auto& name : columns) comp_schema.push_back({name, ColumnType::Number, ""});
    std::vector<Row> comp_rows;
    for (size_t c = 0; c < k; ++c) {
        Row row{Value::text("PC" + std::to_string(c + 1))};
        for (size_t j = 0; j < d; ++j) row.push_back(Value::number(eig.vectors[c][j]));
        comp_rows.push_back(std::move(row));
    }

    PcaResult res;
    res.projected = make_table("pca", std::move(proj_schema), std::move(proj_rows));
    res.components = make_table("pca_components", std::move(comp_schema), std::move(comp_rows));
    res.explained_variance.assign(eig.values.begin(), eig.values.begin() + k);
    return res;
}

// ---------------------------------------------------------------------------
// detect_anomalies: z-score flagging. Statistics use the sample stddev
// (n-1 divisor, matching the covariance convention); a zero stddev flags
// nothing for that column, nulls are never anomalous.
// ---------------------------------------------------------------------------

inline TablePtr detect_anomalies(const Table& t, const std::vector<std::string>& columns,
                                 const std::string& method, double threshold) {
    if (method != "zscore") fail("invalid-spec", "unknown anomaly method '" + method + "'");
    if (!(threshold > 0)) fail("invalid-spec", "threshold must be > 0");
    if (columns.empty()) fail("invalid-spec", "detect_anomalies needs at least one column");

    std::vector<size_t> cols;
    for (const auto& name : columns) {
        size_t i = t.require_column(name);
        if (t.schema()[i].type != ColumnType::Number)
            fail("non-numeric-column", "column '" + name + "' has type " +
                                           to_string(t.schema()[i].type) +
                                           ", expected number");
        cols.push_back(i);
    }

    std::vector<double> mean(cols.size(), 0.0), stddev(cols.size(), 0.0);
    for (size_t c = 0; c < cols.size(); ++c) {
        double sum = 0;
        size_t n = 0;
        for (const auto& row : t.rows()) {
            const Value& v = row[cols[c]];
            if (v.is_null()) continue;
            sum += v.as_number();
            ++n;
        }
        if (n == 0) continue;
        mean[c] = sum / static_cast<double>(n);
        if (n >= 2) {
            double ss = 0;
            for (const auto& row : t.rows()) {
                const Value& v = row[cols[c]];
                if (v.is_null()) continue;
                double d = v.as_number() - mean[c];
                ss += d * d;
            }
            stddev[c] = std::sqrt(ss / static_cast<double>(n - 1));
        }
    }

    std::vector<ColumnSpec> schema = t.schema();
    std::unordered_set<std::string> used;
    for (const auto& s : schema) used.insert(s.name);
    schema.push_back({detail::make_unique_name("is_anomaly", used), ColumnType::Boolean, ""});

    std::vector<Row> rows;
    rows.reserve(t.row_count());
    for (const auto& row : t.rows()) {
        bool flag = false;
        for (size_t c = 0; c < cols.size() && !flag; ++c) {
            const Value& v = row[cols[c]];
            if (v.is_null() || stddev[c] == 0.0) continue;
            if (std::fabs(v.as_number() - mean[c]) / stddev[c] > threshold) flag = true;
        }
        Row out = row;
        out.push_back(Value::boolean(flag));
        rows.push_back(std::move(out));
    }
    return make_table("detect_anomalies", std::move(schema), std::move(rows));
}

// ---------------------------------------------------------------------------
// predict_value: OLS with intercept on a deterministic train/holdout split.
// ---------------------------------------------------------------------------

struct PredictResult {
    TablePtr prediction_table; // holdout rows plus a `predicted` column
    double r2 = 0.0;
    double mean_pct_error = 0.0; // mean percentage error over holdout rows with y != 0
    std::vector<double> coefficients; // intercept first, then one per feature
};

inline PredictResult predict_value(const Table& t, const std::vector<std::string>& features,
                                   const std::string& target, double holdout_fraction,
                                   uint64_t seed) {
    if (features.empty()) fail("invalid-spec", "predict_value needs at least one feature");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        fail("invalid-spec", "holdout_fraction must lie in [0, 1)");

    std::vector<std::string> all_cols = features;
    all_cols.push_back(target);
    auto block = detail::extract_numeric(t, all_cols);
    const size_t n = block.data.size(), p = features.size();

    auto shuffled = detail::shuffled_indices(n, seed);
    size_t holdout_n = static_cast<size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
    std::vector<size_t> holdout(shuffled.begin(), shuffled.begin() + holdout_n);
    std::vector<size_t> train(shuffled.begin() + holdout_n, shuffled.end());
    std::sort(holdout.begin(), holdout.end());
    std::sort(train.begin(), train.end());

    if (train.size() < p + 1)
        fail("insufficient-rows", "need at least " + std::to_string(p + 1) +
                                      " training rows, got " + std::to_string(train.size()));

    // Normal equations (X'X) beta = X'y with a leading intercept column.
    const size_t dim = p + 1;
    Matrix xtx(dim, std::vector<double>(dim, 0.0));
    std::vector<double> xty(dim, 0.0);
    for (size_t s : train) {
        std::vector<double> x(dim, 1.0);
        for (size_t j = 0; j < p; ++j) x[j + 1] = block.data[s][j];
        double y = block.data[s][p];
        for (size_t i = 0; i < dim; ++i) {
            xty[i] += x[i] * y;
            for (size_t j = 0; j < dim; ++j) xtx[i][j] += x[i] * x[j];
        }
    }
    auto beta = linalg::gauss_solve(xtx, xty);

    auto predict = [&](size_t s) {
        double y = beta[0];
        for (size_t j = 0; j < p; ++j) y += beta[j + 1] * block.data[s][j];
        return y;
    };

    std::vector<ColumnSpec> schema = t.schema();
    std::unordered_set<std::string> used;
    for (const auto& s : schema) used.insert(s.name);
    schema.push_back({detail::make_unique_name("predicted", used), ColumnType::Number, ""});

    std::vector<Row> rows;
    rows.reserve(holdout.size());
    for (size_t s : holdout) {
        Row row = t.rows()[block.row_idx[s]];
        row.push_back(Value::number(predict(s)));
        rows.push_back(std::move(row));
    }

    // Metrics over the holdout; with no holdout they describe the fit on
    // the training rows instead.
    const auto& eval_set = holdout.empty() ? train : holdout;
    double y_mean = 0;
    for (size_t s : eval_set) y_mean += block.data[s][p];
    y_mean /= static_cast<double>(eval_set.size());
    double ss_res = 0, ss_tot = 0, pct_sum = 0;
    size_t pct_n = 0;
    for (size_t s : eval_set) {
        double y = block.data[s][p], yhat = predict(s);
        ss_res += (y - yhat) * (y - yhat);
        ss_tot += (y - y_mean) * (y - y_mean);
        if (y != 0.0) {
            pct_sum += std::fabs(yhat - y) / std::fabs(y) * 100.0;
            ++pct_n;
        }
    }

    PredictResult res;
    res.prediction_table = make_table("predict_value", std::move(schema), std::move(rows));
    res.r2 = ss_tot == 0.0 ? (ss_res <= 1e-18 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    res.mean_pct_error = pct_n == 0 ? 0.0 : pct_sum / static_cast<double>(pct_n);
    res.coefficients = std::move(beta);
    return res;
}

} // namespace planql
