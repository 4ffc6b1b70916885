#include "instret/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "instret/error.hpp"
#include "json.hpp"

namespace instret {

double eer_from_scores(const std::vector<double>& positives, const std::vector<double>& negatives) {
    require(!positives.empty() && !negatives.empty(), Err::MalformedTrial,
            "trial needs positive and negative scores");

    // candidate thresholds: every distinct score, plus one above the maximum
    std::vector<double> thresholds;
    thresholds.insert(thresholds.end(), positives.begin(), positives.end());
    thresholds.insert(thresholds.end(), negatives.begin(), negatives.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(thresholds.back() + 1.0);

    auto frr_at = [&](double t) {
        int below = 0;
        for (double p : positives) below += p < t;
        return static_cast<double>(below) / static_cast<double>(positives.size());
    };
    auto far_at = [&](double t) {
        int accepted = 0;
        for (double n : negatives) accepted += n >= t;
        return static_cast<double>(accepted) / static_cast<double>(negatives.size());
    };

    double prev_frr = frr_at(thresholds[0]);
    double prev_far = far_at(thresholds[0]);
    if (prev_frr >= prev_far) return prev_frr == prev_far ? prev_frr : 0.5 * (prev_frr + prev_far);
    for (size_t i = 1; i < thresholds.size(); ++i) {
        double frr = frr_at(thresholds[i]);
        double far = far_at(thresholds[i]);
        if (frr >= far) {
            if (frr == far) return frr;
            // interpolate along the segment between adjacent operating points
            double d0 = prev_frr - prev_far;
            double d1 = frr - far;
            double alpha = -d0 / (d1 - d0);
            return prev_frr + alpha * (frr - prev_frr);
        }
        prev_frr = frr;
        prev_far = far;
    }
    return 1.0;  // unreachable: FRR ends at 1 and FAR at 0
}

EerReport eer(const std::vector<VerificationTrial>& trials) {
    require(!trials.empty(), Err::MalformedTrial, "no verification trials");
    EerReport report;
    double sum = 0.0;
    for (const auto& trial : trials) {
        require(trial.positives.size() == 20 && trial.negatives.size() == 20, Err::MalformedTrial,
                "trial for " + trial.instrument_id + " must carry 20 positive and 20 negative scores");
        double value = eer_from_scores(trial.positives, trial.negatives);
        if (value > 0.5) report.anti_correlated_warning = true;
        report.per_instrument[trial.instrument_id] = value;
        sum += value;
    }
    report.mean_eer = sum / static_cast<double>(trials.size());
    return report;
}

F1Report multilabel_f1(const std::vector<IdSet>& predictions, const std::vector<IdSet>& truths) {
    require(predictions.size() == truths.size(), Err::LengthMismatch,
            "prediction/truth query counts differ");

    std::map<std::string, std::array<int, 3>> counts;  // class -> {tp, fp, fn}
    std::map<std::string, int> support;
    for (const auto& truth : truths)
        for (const auto& c : truth) support[c] += 1;

    for (size_t q = 0; q < truths.size(); ++q) {
        for (const auto& c : truths[q]) {
            if (predictions[q].count(c))
                counts[c][0] += 1;
            else
                counts[c][2] += 1;
        }
        for (const auto& c : predictions[q]) {
            if (!truths[q].count(c) && support.count(c)) counts[c][1] += 1;
        }
    }

    F1Report report;
    double weighted_sum = 0.0;
    int total_support = 0;
    for (const auto& [cls, sup] : support) {
        const auto& c = counts[cls];
        double denom = 2.0 * c[0] + c[1] + c[2];
        double f1 = denom > 0.0 ? 2.0 * c[0] / denom : 0.0;
        report.per_class[cls] = f1;
        report.macro += f1;
        weighted_sum += f1 * sup;
        total_support += sup;
    }
    require(!support.empty(), Err::LengthMismatch, "no ground-truth classes");
    report.macro /= static_cast<double>(support.size());
    report.weighted = weighted_sum / static_cast<double>(total_support);
    return report;
}

std::vector<IdSet> family_collapse(const std::vector<IdSet>& id_sets,
                                   const std::map<std::string, std::string>& id_to_family) {
    std::vector<IdSet> out;
    out.reserve(id_sets.size());
    for (const auto& ids : id_sets) {
        IdSet fams;
        for (const auto& id : ids) {
            auto it = id_to_family.find(id);
            require(it != id_to_family.end(), Err::UnknownId, "no family mapping for " + id);
            fams.insert(it->second);
        }
        out.push_back(std::move(fams));
    }
    return out;
}

double average_precision(const std::vector<double>& scores, const std::vector<bool>& relevance) {
    require(scores.size() == relevance.size(), Err::LengthMismatch,
            "score/relevance lengths differ");
    int relevant = static_cast<int>(std::count(relevance.begin(), relevance.end(), true));
    require(relevant > 0, Err::NoRelevant, "average precision needs a relevant query");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    double ap = 0.0;
    int hits = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (!relevance[order[rank]]) continue;
        hits += 1;
        ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
    return ap / relevant;
}

MapReport mean_average_precision(const std::vector<std::vector<double>>& instrument_scores,
                                 const std::vector<IdSet>& truths,
                                 const std::vector<std::string>& library_ids) {
    require(instrument_scores.size() == truths.size(), Err::LengthMismatch,
            "score rows differ from truth count");
    MapReport report;
    double weighted_sum = 0.0;
    int total_support = 0;
    int classes = 0;
    for (size_t k = 0; k < library_ids.size(); ++k) {
        std::vector<double> scores;
        std::vector<bool> relevance;
        int sup = 0;
        for (size_t q = 0; q < truths.size(); ++q) {
            require(instrument_scores[q].size() == library_ids.size(), Err::LengthMismatch,
                    "score row width differs from library size");
            scores.push_back(instrument_scores[q][k]);
            bool rel = truths[q].count(library_ids[k]) > 0;
            relevance.push_back(rel);
            sup += rel;
        }
        if (sup == 0) continue;  // classes never in truth carry no AP
        double ap = average_precision(scores, relevance);
        report.per_class[library_ids[k]] = ap;
        report.macro += ap;
        weighted_sum += ap * sup;
        total_support += sup;
        classes += 1;
    }
    require(classes > 0, Err::NoRelevant, "no library instrument appears in any truth set");
    report.macro /= classes;
    report.weighted = weighted_sum / total_support;
    return report;
}

std::string MetricReport::to_json(bool per_class) const {
    nlohmann::json j;
    auto f1_json = [&](const F1Report& r) {
        nlohmann::json o = {{"macro", r.macro}, {"weighted", r.weighted}};
        if (per_class) o["per_class"] = r.per_class;
        return o;
    };
    auto map_json = [&](const MapReport& r) {
        nlohmann::json o = {{"macro", r.macro}, {"weighted", r.weighted}};
        if (per_class) o["per_class"] = r.per_class;
        return o;
    };
    j["instrument"] = {{"f1", f1_json(instrument_f1)}, {"map", map_json(instrument_map)}};
    j["family"] = {{"f1", f1_json(family_f1)}, {"map", map_json(family_map)}};
    if (verification) {
        j["verification"] = {{"mean_eer", verification->mean_eer},
                             {"anti_correlated_warning", verification->anti_correlated_warning}};
        if (per_class) j["verification"]["per_instrument"] = verification->per_instrument;
    }
    return j.dump(2);
}

namespace {

// family-level scores: per family, the best score of any of its instruments
std::vector<std::vector<double>> collapse_scores(
    const std::vector<std::vector<double>>& instrument_scores,
    const std::vector<std::string>& library_ids,
    const std::map<std::string, std::string>& id_to_family,
    std::vector<std::string>& family_ids_out) {
    std::vector<std::string> family_ids;
    std::map<std::string, size_t> family_slot;
    std::vector<size_t> instrument_to_family(library_ids.size());
    for (size_t k = 0; k < library_ids.size(); ++k) {
        auto it = id_to_family.find(library_ids[k]);
        require(it != id_to_family.end(), Err::UnknownId, "no family mapping for " + library_ids[k]);
        auto [slot_it, inserted] = family_slot.try_emplace(it->second, family_ids.size());
        if (inserted) family_ids.push_back(it->second);
        instrument_to_family[k] = slot_it->second;
    }
    std::vector<std::vector<double>> out(instrument_scores.size());
    for (size_t q = 0; q < instrument_scores.size(); ++q) {
        out[q].assign(family_ids.size(), -std::numeric_limits<double>::infinity());
        for (size_t k = 0; k < library_ids.size(); ++k)
            out[q][instrument_to_family[k]] =
                std::max(out[q][instrument_to_family[k]], instrument_scores[q][k]);
    }
    family_ids_out = std::move(family_ids);
    return out;
}

}  // namespace

MetricReport retrieval_report(const std::vector<IdSet>& predictions,
                              const std::vector<IdSet>& truths,
                              const std::vector<std::vector<double>>& instrument_scores,
                              const std::vector<std::string>& library_ids,
                              const std::map<std::string, std::string>& id_to_family) {
    MetricReport report;
    report.instrument_f1 = multilabel_f1(predictions, truths);
    report.family_f1 =
        multilabel_f1(family_collapse(predictions, id_to_family), family_collapse(truths, id_to_family));
    report.instrument_map = mean_average_precision(instrument_scores, truths, library_ids);

    std::vector<std::string> family_ids;
    auto family_scores = collapse_scores(instrument_scores, library_ids, id_to_family, family_ids);
    report.family_map =
        mean_average_precision(family_scores, family_collapse(truths, id_to_family), family_ids);
    return report;
}

MetricReport chance_baseline(const std::vector<IdSet>& truths,
                             const std::vector<std::string>& library_ids,
                             const std::map<std::string, std::string>& id_to_family, int slots,
                             uint64_t seed, int trials) {
    require(!truths.empty() && !library_ids.empty(), Err::LengthMismatch,
            "chance baseline needs truths and a library");
    require(slots >= 1 && trials >= 1, Err::BadConfig, "bad chance-baseline setup");

    MetricReport mean;
    for (int t = 0; t < trials; ++t) {
        std::vector<IdSet> predictions;
        std::vector<std::vector<double>> scores;
        Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
        for (size_t q = 0; q < truths.size(); ++q) {
            Matrix sim(slots, static_cast<int>(library_ids.size()));
            for (double& v : sim.values) v = rng.uniform(-1.0, 1.0);
            RetrievalResult r = retrieve(sim, library_ids);
            predictions.push_back(r.retrieved);
            scores.push_back(r.instrument_scores);
        }
        MetricReport one = retrieval_report(predictions, truths, scores, library_ids, id_to_family);
        mean.instrument_f1.macro += one.instrument_f1.macro;
        mean.instrument_f1.weighted += one.instrument_f1.weighted;
        mean.family_f1.macro += one.family_f1.macro;
        mean.family_f1.weighted += one.family_f1.weighted;
        mean.instrument_map.macro += one.instrument_map.macro;
        mean.instrument_map.weighted += one.instrument_map.weighted;
        mean.family_map.macro += one.family_map.macro;
        mean.family_map.weighted += one.family_map.weighted;
    }
    double inv = 1.0 / trials;
    mean.instrument_f1.macro *= inv;
    mean.instrument_f1.weighted *= inv;
    mean.family_f1.macro *= inv;
    mean.family_f1.weighted *= inv;
    mean.instrument_map.macro *= inv;
    mean.instrument_map.weighted *= inv;
    mean.family_map.macro *= inv;
    mean.family_map.weighted *= inv;
    return mean;
}

std::vector<VerificationTrial> make_verification_trials(
    const std::vector<std::string>& instrument_ids,
    const std::vector<std::vector<std::vector<double>>>& embeddings_per_instrument,
    uint64_t seed) {
    require(instrument_ids.size() == embeddings_per_instrument.size(), Err::LengthMismatch,
            "id/embedding list mismatch");
    require(instrument_ids.size() >= 2, Err::MalformedTrial,
            "verification needs at least two instruments");

    std::vector<VerificationTrial> trials;
    for (size_t t = 0; t < instrument_ids.size(); ++t) {
        const auto& own = embeddings_per_instrument[t];
        require(own.size() >= 25, Err::MalformedTrial,
                "instrument " + instrument_ids[t] + " needs >= 25 clips (5 enrollment + 20 positives)");
        Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));

        // enrollment clips are disjoint from positive clips
        std::vector<int> order =
            rng.sample_without_replacement(static_cast<int>(own.size()), 25);
        std::vector<double> enrollment(own[0].size(), 0.0);
        for (int i = 0; i < 5; ++i) {
            const auto& e = own[static_cast<size_t>(order[static_cast<size_t>(i)])];
            for (size_t d = 0; d < enrollment.size(); ++d) enrollment[d] += e[d];
        }
        for (double& v : enrollment) v /= 5.0;
        guard_nonzero(enrollment);

        VerificationTrial trial;
        trial.instrument_id = instrument_ids[t];
        for (int i = 5; i < 25; ++i) {
            const auto& e = own[static_cast<size_t>(order[static_cast<size_t>(i)])];
            trial.positives.push_back(cosine(enrollment, e));
        }
        for (int i = 0; i < 20; ++i) {
            size_t other = static_cast<size_t>(
                rng.uniform_int(0, static_cast<int>(instrument_ids.size()) - 2));
            if (other >= t) other += 1;
            const auto& pool = embeddings_per_instrument[other];
            const auto& e = pool[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
            trial.negatives.push_back(cosine(enrollment, e));
        }
        trials.push_back(std::move(trial));
    }
    return trials;
}

}  // namespace instret
