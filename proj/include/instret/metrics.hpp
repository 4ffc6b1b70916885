#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "instret/retrieval.hpp"

namespace instret {

// One verification trial: an enrollment embedding compared against positive
// and negative cosine scores (the 5/20/20 protocol).
struct VerificationTrial {
    std::string instrument_id;
    std::vector<double> positives;  // exactly 20 scores
    std::vector<double> negatives;  // exactly 20 scores
};

struct EerReport {
    double mean_eer = 0.0;
    std::map<std::string, double> per_instrument;
    bool anti_correlated_warning = false;  // any trial with EER > 0.5
};

// Threshold-free equal error rate per trial, linearly interpolated between
// adjacent ROC operating points; mean over instruments.
EerReport eer(const std::vector<VerificationTrial>& trials);

// internal sweep for a single trial, exposed for tests
double eer_from_scores(const std::vector<double>& positives, const std::vector<double>& negatives);

using IdSet = std::set<std::string>;

struct F1Report {
    std::map<std::string, double> per_class;
    double macro = 0.0;
    double weighted = 0.0;  // ground-truth support weighting
};

// Multi-label F1 over queries; classes are the union of truth ids.
F1Report multilabel_f1(const std::vector<IdSet>& predictions, const std::vector<IdSet>& truths);

// replaces instrument ids by their families, set-deduplicated
std::vector<IdSet> family_collapse(const std::vector<IdSet>& id_sets,
                                   const std::map<std::string, std::string>& id_to_family);

// AP for one class: queries ranked by descending score (ties by query index),
// mean precision at each relevant rank.
double average_precision(const std::vector<double>& scores, const std::vector<bool>& relevance);

struct MapReport {
    std::map<std::string, double> per_class;
    double macro = 0.0;
    double weighted = 0.0;
};

// per-class AP where the class score of a query is that instrument's maximum
// cosine similarity over output slots
MapReport mean_average_precision(const std::vector<std::vector<double>>& instrument_scores,
                                 const std::vector<IdSet>& truths,
                                 const std::vector<std::string>& library_ids);

struct MetricReport {
    F1Report instrument_f1;
    F1Report family_f1;
    MapReport instrument_map;
    MapReport family_map;
    std::optional<EerReport> verification;
    std::string to_json(bool per_class = false) const;
};

// Scores retrieval predictions against truths at both instrument and family
// level. instrument_scores rows parallel the queries.
MetricReport retrieval_report(const std::vector<IdSet>& predictions,
                              const std::vector<IdSet>& truths,
                              const std::vector<std::vector<double>>& instrument_scores,
                              const std::vector<std::string>& library_ids,
                              const std::map<std::string, std::string>& id_to_family);

// Empirical chance level: per query, M slots pick uniformly over the library
// (iid uniform similarity rows); averaged over `trials` repeats.
MetricReport chance_baseline(const std::vector<IdSet>& truths,
                             const std::vector<std::string>& library_ids,
                             const std::map<std::string, std::string>& id_to_family, int slots,
                             uint64_t seed, int trials);

// Builds 5/20/20 verification trials from per-instrument embeddings
// (>= 25 embeddings each; negatives drawn from the other instruments).
std::vector<VerificationTrial> make_verification_trials(
    const std::vector<std::string>& instrument_ids,
    const std::vector<std::vector<std::vector<double>>>& embeddings_per_instrument, uint64_t seed);

}  // namespace instret
