#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "instret/instrument.hpp"
#include "instret/midi.hpp"

namespace instret {

struct DatasetConfig {
    int train_instruments = 32;
    int valid_instruments = 8;
    int clips_per_instrument = 10;
    std::vector<Family> families = {Family::Guitar, Family::Organ, Family::Flute, Family::String};
    int multi_train_entries = 0;
    int multi_valid_entries = 0;
    int multi_min = 2;  // instruments per mixture
    int multi_max = 9;
    uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> midi_dir;  // render parsed MIDI instead of generated scores
    int workers = 1;

    void validate() const;
};

struct ManifestEntry {
    std::string kind;  // "single" | "multi"
    std::string split; // "train" | "valid"
    std::string clip_path;                // single: the clip; multi: the mixture
    std::vector<std::string> instruments; // one id for single, 2-9 for multi
    std::vector<std::string> families;
    std::vector<std::string> stem_paths;  // multi only
    uint64_t seed = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path root;  // directory entries' relative paths resolve against
};

struct GeneratedDataset {
    DatasetManifest manifest;
    std::vector<InstrumentSpec> train_specs;
    std::vector<InstrumentSpec> valid_specs;
};

// Renders the single and multi datasets to out_dir, writes `manifest.jsonl`
// (one JSON entry per clip) and `dataset.json` (config, instrument
// parameters, provenance).
GeneratedDataset generate_dataset(const DatasetConfig& config);

// same, with caller-provided instrument banks (ids must be disjoint)
GeneratedDataset generate_dataset(const DatasetConfig& config,
                                  std::vector<InstrumentSpec> train_specs,
                                  std::vector<InstrumentSpec> valid_specs);

DatasetManifest load_manifest(const std::filesystem::path& jsonl_path);

// In-memory pool of single-instrument clips, the source for on-the-fly mixing.
struct ClipPool {
    struct Entry {
        std::string instrument_id;
        Family family = Family::Keyboard;
        AudioClip clip;
    };
    std::vector<Entry> entries;
    // entry indices grouped per instrument, instrument order = first appearance
    std::vector<std::string> instrument_ids;
    std::vector<std::vector<int>> clips_by_instrument;

    void add(const std::string& id, Family family, AudioClip clip);
    int instrument_count() const { return static_cast<int>(instrument_ids.size()); }
};

ClipPool load_pool(const DatasetManifest& manifest, const std::string& split);

struct RandomMix {
    AudioClip mixture;
    std::vector<std::string> instrument_ids;  // distinct
    std::vector<int> entry_indices;           // pool entries summed into the mixture
};

// Uniform instrument count in [min_count, max_count], instruments sampled
// without replacement, one uniformly-chosen clip each; mixture is the
// normalized sum. Deterministic given seed.
RandomMix random_mix(const ClipPool& pool, uint64_t seed, int min_count = 2, int max_count = 9);

// Family-balanced random instruments: ids like "guitar_003", round-robin over
// the family list.
std::vector<InstrumentSpec> make_instrument_bank(const std::vector<Family>& families, int count,
                                                 const std::string& id_prefix, Rng& rng);

// a family-matched 5 s excerpt for the given instrument, from MIDI tracks if
// provided, procedurally generated otherwise
TrackScore track_for_family(Family family, const std::vector<TrackScore>& midi_tracks,
                            uint64_t seed);

}  // namespace instret
