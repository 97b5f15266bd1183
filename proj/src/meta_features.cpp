#include "mx/meta_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mx/util.hpp"

namespace mx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A table recoded for the learners: numeric matrix + categorical label ids,
// missing values already filled (train median / own "missing" category).
struct Recoded {
    std::vector<std::size_t> num_cols;   // indices into table columns
    std::vector<std::size_t> cat_cols;
    std::vector<std::vector<double>> num;   // [row][num feature]
    std::vector<std::vector<std::string>> cat;  // [row][cat feature]
};

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool cell_number(const Cell& c, double& out) {
    if (!std::holds_alternative<double>(c)) return false;
    out = std::get<double>(c);
    return std::isfinite(out);
}

// Any cell as a category label; numeric cells use their shortest printable
// form so equal values land in the same bucket.
bool cell_label(const Cell& c, std::string& out) {
    if (std::holds_alternative<std::string>(c)) {
        out = std::get<std::string>(c);
        return true;
    }
    double v = std::get<double>(c);
    if (!std::isfinite(v)) return false;
    out = repr_double(v);
    return true;
}

double entropy_nat(const std::map<std::string, std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [_, n] : counts) {
        if (n == 0) continue;
        double p = static_cast<double>(n) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return h;
}

struct Moments {
    double mean = kNaN, sd = kNaN, skew = kNaN, kurt = kNaN;
};

// Population central moments; skewness m3/m2^1.5, excess kurtosis m4/m2^2 - 3.
Moments column_moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) return m;
    double n = static_cast<double>(xs.size());
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.mean = mean;
    m.sd = std::sqrt(m2);
    if (m2 > 0) {
        m.skew = m3 / std::pow(m2, 1.5);
        m.kurt = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

double mutual_info_nat(const std::vector<std::string>& xs, const std::vector<std::string>& ys) {
    std::map<std::string, std::size_t> cx, cy;
    std::map<std::pair<std::string, std::string>, std::size_t> cxy;
    std::size_t n = xs.size();
    for (std::size_t i = 0; i < n; ++i) {
        ++cx[xs[i]];
        ++cy[ys[i]];
        ++cxy[{xs[i], ys[i]}];
    }
    double mi = 0.0;
    for (const auto& [key, nxy] : cxy) {
        double pxy = static_cast<double>(nxy) / n;
        double px = static_cast<double>(cx.at(key.first)) / n;
        double py = static_cast<double>(cy.at(key.second)) / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    return std::max(mi, 0.0);  // clamp the occasional -1e-17
}

Recoded recode(const TableData& table, std::size_t target_col,
               const std::vector<std::size_t>& train_rows) {
    Recoded r;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c == target_col) continue;
        (table.kinds[c] == VarKind::kNumeric ? r.num_cols : r.cat_cols).push_back(c);
    }
    // Fill medians from the training rows so the holdout stays untouched.
    std::vector<double> fill(r.num_cols.size(), 0.0);
    for (std::size_t j = 0; j < r.num_cols.size(); ++j) {
        std::vector<double> vals;
        for (std::size_t i : train_rows) {
            double v;
            if (cell_number(table.rows[i][r.num_cols[j]], v)) vals.push_back(v);
        }
        fill[j] = median_of(std::move(vals));
    }
    r.num.resize(table.rows.size());
    r.cat.resize(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        r.num[i].resize(r.num_cols.size());
        for (std::size_t j = 0; j < r.num_cols.size(); ++j) {
            double v;
            r.num[i][j] = cell_number(table.rows[i][r.num_cols[j]], v) ? v : fill[j];
        }
        r.cat[i].resize(r.cat_cols.size());
        for (std::size_t j = 0; j < r.cat_cols.size(); ++j) {
            std::string s;
            r.cat[i][j] = cell_label(table.rows[i][r.cat_cols[j]], s) ? s : "__missing__";
        }
    }
    return r;
}

std::string majority_label(const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [lab, n] : counts) {
        if (n > best_n) { best = lab; best_n = n; }  // map order breaks ties low
    }
    return best;
}

// Depth-1 tree. Classification minimizes weighted Gini, regression weighted
// SSE. Numeric splits are x <= t over midpoints, categorical are x == v.
struct Stump {
    enum { kNone, kNumeric, kCategorical } split = kNone;
    std::size_t feature = 0;  // index into Recoded::num or ::cat
    double threshold = 0;
    std::string category;
    std::string left_label, right_label;  // classification leaves
    double left_value = 0, right_value = 0;  // regression leaves
};

double gini(const std::map<std::string, std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (const auto& [_, n] : counts) {
        double p = static_cast<double>(n) / total;
        g -= p * p;
    }
    return g;
}

Stump fit_stump_cls(const Recoded& r, const std::vector<std::string>& y,
                    const std::vector<std::size_t>& rows) {
    Stump best;
    std::map<std::string, std::size_t> all_counts;
    for (std::size_t i : rows) ++all_counts[y[i]];
    best.left_label = best.right_label = majority_label(all_counts);
    double best_score = gini(all_counts, rows.size());

    auto consider = [&](auto in_left, std::size_t feat, bool numeric, double thr,
                        const std::string& cat) {
        std::map<std::string, std::size_t> lc, rc;
        std::size_t ln = 0, rn = 0;
        for (std::size_t i : rows) {
            if (in_left(i)) { ++lc[y[i]]; ++ln; }
            else { ++rc[y[i]]; ++rn; }
        }
        if (ln == 0 || rn == 0) return;
        double score = (ln * gini(lc, ln) + rn * gini(rc, rn)) / rows.size();
        if (score < best_score - 1e-12) {
            best_score = score;
            best.split = numeric ? Stump::kNumeric : Stump::kCategorical;
            best.feature = feat;
            best.threshold = thr;
            best.category = cat;
            best.left_label = majority_label(lc);
            best.right_label = majority_label(rc);
        }
    };

    for (std::size_t f = 0; f < r.num_cols.size(); ++f) {
        std::vector<double> vals;
        for (std::size_t i : rows) vals.push_back(r.num[i][f]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            double thr = 0.5 * (vals[k] + vals[k + 1]);
            consider([&](std::size_t i) { return r.num[i][f] <= thr; }, f, true, thr, "");
        }
    }
    for (std::size_t f = 0; f < r.cat_cols.size(); ++f) {
        std::map<std::string, std::size_t> seen;
        for (std::size_t i : rows) ++seen[r.cat[i][f]];
        for (const auto& [v, _] : seen)
            consider([&](std::size_t i) { return r.cat[i][f] == v; }, f, false, 0, v);
    }
    return best;
}

Stump fit_stump_reg(const Recoded& r, const std::vector<double>& y,
                    const std::vector<std::size_t>& rows) {
    Stump best;
    double sum = 0;
    for (std::size_t i : rows) sum += y[i];
    best.left_value = best.right_value = sum / rows.size();
    double best_score = 0;
    for (std::size_t i : rows) {
        double d = y[i] - best.left_value;
        best_score += d * d;
    }

    auto consider = [&](auto in_left, std::size_t feat, bool numeric, double thr,
                        const std::string& cat) {
        double ls = 0, rs = 0;
        std::size_t ln = 0, rn = 0;
        for (std::size_t i : rows) {
            if (in_left(i)) { ls += y[i]; ++ln; }
            else { rs += y[i]; ++rn; }
        }
        if (ln == 0 || rn == 0) return;
        double lm = ls / ln, rm = rs / rn;
        double score = 0;
        for (std::size_t i : rows) {
            double d = y[i] - (in_left(i) ? lm : rm);
            score += d * d;
        }
        if (score < best_score - 1e-12) {
            best_score = score;
            best.split = numeric ? Stump::kNumeric : Stump::kCategorical;
            best.feature = feat;
            best.threshold = thr;
            best.category = cat;
            best.left_value = lm;
            best.right_value = rm;
        }
    };

    for (std::size_t f = 0; f < r.num_cols.size(); ++f) {
        std::vector<double> vals;
        for (std::size_t i : rows) vals.push_back(r.num[i][f]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            double thr = 0.5 * (vals[k] + vals[k + 1]);
            consider([&](std::size_t i) { return r.num[i][f] <= thr; }, f, true, thr, "");
        }
    }
    for (std::size_t f = 0; f < r.cat_cols.size(); ++f) {
        std::map<std::string, std::size_t> seen;
        for (std::size_t i : rows) ++seen[r.cat[i][f]];
        for (const auto& [v, _] : seen)
            consider([&](std::size_t i) { return r.cat[i][f] == v; }, f, false, 0, v);
    }
    return best;
}

bool stump_goes_left(const Stump& s, const Recoded& r, std::size_t i) {
    if (s.split == Stump::kNumeric) return r.num[i][s.feature] <= s.threshold;
    if (s.split == Stump::kCategorical) return r.cat[i][s.feature] == s.category;
    return true;
}

// 1-NN over standardized numeric features plus 0/1 categorical mismatch.
// Standardization stats come from the training rows.
struct NnModel {
    std::vector<double> mu, sigma;
    const Recoded* r = nullptr;
    std::vector<std::size_t> train;
};

NnModel fit_nn(const Recoded& r, const std::vector<std::size_t>& train) {
    NnModel m;
    m.r = &r;
    m.train = train;
    m.mu.assign(r.num_cols.size(), 0.0);
    m.sigma.assign(r.num_cols.size(), 0.0);
    for (std::size_t f = 0; f < r.num_cols.size(); ++f) {
        double s = 0;
        for (std::size_t i : train) s += r.num[i][f];
        m.mu[f] = s / train.size();
        double v = 0;
        for (std::size_t i : train) {
            double d = r.num[i][f] - m.mu[f];
            v += d * d;
        }
        m.sigma[f] = std::sqrt(v / train.size());
    }
    return m;
}

std::size_t nn_lookup(const NnModel& m, std::size_t query) {
    double best_d = std::numeric_limits<double>::infinity();
    std::size_t best_i = m.train.front();
    for (std::size_t i : m.train) {
        double d = 0;
        for (std::size_t f = 0; f < m.r->num_cols.size(); ++f) {
            if (m.sigma[f] == 0) continue;
            double z = (m.r->num[query][f] - m.r->num[i][f]) / m.sigma[f];
            d += z * z;
        }
        for (std::size_t f = 0; f < m.r->cat_cols.size(); ++f)
            if (m.r->cat[query][f] != m.r->cat[i][f]) d += 1.0;
        if (d < best_d) { best_d = d; best_i = i; }
    }
    return best_i;
}

double r2_about_test_mean(const std::vector<double>& truth, const std::vector<double>& pred) {
    double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / truth.size();
    double sse = 0, sst = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        sse += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        sst += (truth[i] - mean) * (truth[i] - mean);
    }
    if (sst == 0) return 0.0;
    return 1.0 - sse / sst;
}

}  // namespace

const std::vector<std::string>& meta_feature_names() {
    static const std::vector<std::string> names = {
        "n_instances",    "n_features",     "n_classes",
        "feat_mean",      "feat_sd",        "feat_skewness", "feat_kurtosis",
        "target_entropy", "mean_mutual_info",
        "landmark_stump", "landmark_1nn",
    };
    return names;
}

MetaFeatureExtraction extract_meta_features(const TableData& table,
                                            const std::string& target_column,
                                            TaskKind task,
                                            std::uint64_t seed) {
    table.check_shape();
    if (table.rows.size() < 2) throw ValidationError("meta-feature extraction needs >= 2 rows");
    if (table.columns.size() < 2)
        throw ValidationError("meta-feature extraction needs at least one feature column");
    std::size_t target_col = table.column_index(target_column);

    MetaFeatureExtraction out;
    auto& mf = out.vector;
    mf.names = meta_feature_names();
    mf.values.assign(mf.names.size(), kNaN);
    using C = MetaFeatureCategory;
    mf.categories = {C::kSimple,       C::kSimple,      C::kSimple,
                     C::kStatistical,  C::kStatistical, C::kStatistical, C::kStatistical,
                     C::kInfoTheoretic, C::kInfoTheoretic,
                     C::kLandmarker,   C::kLandmarker};

    std::size_t n = table.rows.size();
    mf.values[0] = static_cast<double>(n);
    mf.values[1] = static_cast<double>(table.columns.size() - 1);

    // Target as labels, used for n_classes, entropy and MI. Regression
    // targets are bucketed by exact value here, which is what the empirical
    // entropy of the column means.
    std::vector<std::string> target_labels(n);
    std::map<std::string, std::size_t> target_counts;
    std::size_t target_valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::string lab;
        if (cell_label(table.rows[i][target_col], lab)) {
            target_labels[i] = lab;
            ++target_counts[lab];
            ++target_valid;
        } else {
            target_labels[i] = "__missing__";
            ++target_counts["__missing__"];
            ++target_valid;
        }
    }
    mf.values[2] = task == TaskKind::kClassification
                       ? static_cast<double>(target_counts.size())
                       : 0.0;
    mf.values[7] = entropy_nat(target_counts, target_valid);
    if (target_counts.size() == 1) out.notes.push_back("constant target: entropy set to 0");

    // Moment statistics averaged over numeric feature columns.
    double sum_mean = 0, sum_sd = 0, sum_skew = 0, sum_kurt = 0;
    std::size_t n_ms = 0, n_sk = 0;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c == target_col || table.kinds[c] != VarKind::kNumeric) continue;
        std::vector<double> xs;
        for (const auto& row : table.rows) {
            double v;
            if (cell_number(row[c], v)) xs.push_back(v);
        }
        Moments m = column_moments(xs);
        if (!std::isnan(m.mean)) {
            sum_mean += m.mean;
            sum_sd += m.sd;
            ++n_ms;
        }
        if (!std::isnan(m.skew)) {
            sum_skew += m.skew;
            sum_kurt += m.kurt;
            ++n_sk;
        }
    }
    if (n_ms > 0) {
        mf.values[3] = sum_mean / n_ms;
        mf.values[4] = sum_sd / n_ms;
    } else {
        out.notes.push_back("no numeric features: moment statistics undefined");
    }
    if (n_sk > 0) {
        mf.values[5] = sum_skew / n_sk;
        mf.values[6] = sum_kurt / n_sk;
    }

    // Mean MI between categorical feature columns and the target labels.
    double sum_mi = 0;
    std::size_t n_mi = 0;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c == target_col || table.kinds[c] != VarKind::kCategorical) continue;
        std::vector<std::string> xs(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::string s;
            xs[i] = cell_label(table.rows[i][c], s) ? s : "__missing__";
        }
        sum_mi += mutual_info_nat(xs, target_labels);
        ++n_mi;
    }
    if (n_mi > 0) mf.values[8] = sum_mi / n_mi;
    else out.notes.push_back("no categorical features: mutual information undefined");

    // Landmarkers on a seeded 70/30 row split.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, 1));
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(std::ceil(0.7 * static_cast<double>(n)));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> test(idx.begin() + n_train, idx.end());

    if (test.empty()) {
        out.notes.push_back("holdout empty: landmarkers undefined");
        return out;
    }
    Recoded rec = recode(table, target_col, train);

    if (task == TaskKind::kClassification) {
        Stump stump = fit_stump_cls(rec, target_labels, train);
        NnModel nn = fit_nn(rec, train);
        std::size_t ok_stump = 0, ok_nn = 0;
        for (std::size_t i : test) {
            const std::string& pred =
                stump_goes_left(stump, rec, i) ? stump.left_label : stump.right_label;
            if (pred == target_labels[i]) ++ok_stump;
            if (target_labels[nn_lookup(nn, i)] == target_labels[i]) ++ok_nn;
        }
        mf.values[9] = static_cast<double>(ok_stump) / test.size();
        mf.values[10] = static_cast<double>(ok_nn) / test.size();
    } else {
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double v;
            if (cell_number(table.rows[i][target_col], v)) y[i] = v;
        }
        Stump stump = fit_stump_reg(rec, y, train);
        NnModel nn = fit_nn(rec, train);
        std::vector<double> truth, p_stump, p_nn;
        for (std::size_t i : test) {
            truth.push_back(y[i]);
            p_stump.push_back(stump_goes_left(stump, rec, i) ? stump.left_value
                                                             : stump.right_value);
            p_nn.push_back(y[nn_lookup(nn, i)]);
        }
        mf.values[9] = r2_about_test_mean(truth, p_stump);
        mf.values[10] = r2_about_test_mean(truth, p_nn);
    }
    return out;
}

ImputerStats fit_imputer(const std::vector<const MetaFeatureVector*>& fit_set) {
    if (fit_set.empty()) throw ValidationError("imputer needs at least one fit vector");
    ImputerStats st;
    st.names = fit_set.front()->names;
    for (const auto* mf : fit_set)
        if (mf->names != st.names)
            throw ValidationError("imputer fit set has inconsistent meta-feature names");
    st.medians.resize(st.names.size());
    st.n_missing_fit.assign(st.names.size(), 0);
    for (std::size_t j = 0; j < st.names.size(); ++j) {
        std::vector<double> vals;
        for (const auto* mf : fit_set) {
            double v = mf->values[j];
            if (std::isnan(v)) ++st.n_missing_fit[j];
            else vals.push_back(v);
        }
        st.medians[j] = median_of(std::move(vals));
    }
    return st;
}

std::size_t apply_imputer(const ImputerStats& stats, MetaFeatureVector& mf) {
    if (mf.names != stats.names)
        throw ValidationError("meta-feature names do not match the fitted imputer");
    std::size_t filled = 0;
    for (std::size_t j = 0; j < mf.values.size(); ++j) {
        if (std::isnan(mf.values[j])) {
            mf.values[j] = stats.medians[j];
            ++filled;
        }
    }
    return filled;
}

}  // namespace mx
