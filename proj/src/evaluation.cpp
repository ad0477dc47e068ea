#include "seqforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "seqforge/errors.hpp"

namespace seqforge {

MetricsReport precision_recall(const std::vector<int>& predictions,
                               const std::vector<int>& labels) {
    if (predictions.empty()) throw std::invalid_argument("precision_recall: empty input");
    if (predictions.size() != labels.size())
        throw std::invalid_argument("precision_recall: length mismatch");
    const std::size_t C = kNumClasses;
    MetricsReport r;
    r.confusion = Tensor({C, C});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= static_cast<int>(C) || predictions[i] < 0 ||
            predictions[i] >= static_cast<int>(C))
            throw std::invalid_argument("precision_recall: class index out of range");
        r.confusion.at(labels[i], predictions[i]) += 1.0;
    }
    r.precision.assign(C, 0.0);
    r.recall.assign(C, 0.0);
    r.precision_defined.assign(C, true);
    r.support.assign(C, 0);
    for (std::size_t c = 0; c < C; ++c) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            row += r.confusion.at(c, j);
            col += r.confusion.at(j, c);
        }
        r.support[c] = static_cast<std::size_t>(row);
        r.recall[c] = row > 0 ? 100.0 * r.confusion.at(c, c) / row : 0.0;
        if (col > 0) {
            r.precision[c] = 100.0 * r.confusion.at(c, c) / col;
        } else {
            r.precision[c] = 0.0;
            r.precision_defined[c] = false;
        }
        r.macro_precision += r.precision[c];
        r.macro_recall += r.recall[c];
    }
    r.macro_precision /= static_cast<double>(C);
    r.macro_recall /= static_cast<double>(C);
    return r;
}

double adjacency_entropy(const TransitionMatrix& tm) {
    double h = 0.0;
    for (double p : tm.normalized.values())
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

namespace {

// Quartiles by linear interpolation between closest ranks on the sorted
// sample (the common "type 7" rule).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<ClusterProfile> cluster_profiles(const Dataset& dataset,
                                             const std::vector<int>& assignments,
                                             const FeatureSchema& schema, std::size_t k) {
    const std::size_t width = schema.encoded_width();
    // collect raw values per cluster per feature column
    std::vector<std::vector<std::vector<double>>> values(k);
    std::vector<double> length_sum(k, 0.0);
    std::vector<std::size_t> population(k, 0);
    for (auto& v : values) v.resize(width);

    std::size_t idx = 0;
    for (const auto& sample : dataset) {
        for (const auto& seq : sample.sequences) {
            if (seq.valid_length == 0) continue;  // padded or empty sequence
            if (idx >= assignments.size())
                throw std::invalid_argument("cluster_profiles: fewer assignments than sequences");
            const int c = assignments[idx++];
            if (c < 0 || static_cast<std::size_t>(c) >= k)
                throw std::invalid_argument("cluster_profiles: assignment out of range");
            ++population[c];
            length_sum[c] += static_cast<double>(seq.raw_length());
            for (const auto& game : seq.games)
                for (std::size_t f = 0; f < width; ++f) values[c][f].push_back(game.features[f]);
        }
    }
    if (idx != assignments.size())
        throw std::invalid_argument("cluster_profiles: more assignments than sequences");

    std::vector<ClusterProfile> profiles;
    for (std::size_t c = 0; c < k; ++c) {
        ClusterProfile p;
        p.cluster_id = static_cast<int>(c);
        p.population = population[c];
        if (population[c] > 0) {
            p.mean_sequence_length = length_sum[c] / static_cast<double>(population[c]);
            for (std::size_t f = 0; f < width; ++f) {
                auto& xs = values[c][f];
                std::sort(xs.begin(), xs.end());
                FeatureStats st;
                double sum = 0.0;
                for (double x : xs) sum += x;
                st.mean = xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
                st.median = quantile_sorted(xs, 0.5);
                st.q1 = quantile_sorted(xs, 0.25);
                st.q3 = quantile_sorted(xs, 0.75);
                p.features.push_back(st);
            }
        }
        profiles.push_back(std::move(p));
    }
    std::stable_sort(profiles.begin(), profiles.end(),
                     [](const ClusterProfile& a, const ClusterProfile& b) {
                         return a.population > b.population;
                     });
    return profiles;
}

double cluster_recovery(const std::vector<int>& assignments,
                        const std::vector<int>& ground_truth) {
    if (assignments.size() != ground_truth.size())
        throw std::invalid_argument("cluster_recovery: length mismatch");
    const std::size_t n = assignments.size();
    if (n == 0) throw std::invalid_argument("cluster_recovery: empty input");

    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> row_sums, col_sums;
    for (std::size_t i = 0; i < n; ++i) {
        cells[{assignments[i], ground_truth[i]}] += 1.0;
        row_sums[assignments[i]] += 1.0;
        col_sums[ground_truth[i]] += 1.0;
    }
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, a = 0.0, b = 0.0;
    for (const auto& [key, v] : cells) index += choose2(v);
    for (const auto& [key, v] : row_sums) a += choose2(v);
    for (const auto& [key, v] : col_sums) b += choose2(v);
    const double total_pairs = choose2(static_cast<double>(n));
    const double expected = total_pairs > 0 ? a * b / total_pairs : 0.0;
    const double max_index = 0.5 * (a + b);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (index - expected) / (max_index - expected);
}

void export_embeddings(const std::string& path, const std::vector<EmbeddingRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embeddings file: " + path);
    const std::size_t m = rows.empty() ? 0 : rows[0].latent.size();
    out << "player_id,seq_index,cluster_id";
    for (std::size_t i = 1; i <= m; ++i) out << ",h_" << i;
    out << "\n";
    char buf[64];
    for (const auto& r : rows) {
        out << r.player_id << "," << r.seq_index << "," << r.cluster_id;
        for (double v : r.latent) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
}

std::vector<EmbeddingRow> load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path);
    std::vector<EmbeddingRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        EmbeddingRow r;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, r.player_id, ',');
        std::getline(ss, tok, ',');
        r.seq_index = static_cast<std::size_t>(std::stoul(tok));
        std::getline(ss, tok, ',');
        r.cluster_id = std::stoi(tok);
        while (std::getline(ss, tok, ',')) r.latent.push_back(std::stod(tok));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace seqforge
