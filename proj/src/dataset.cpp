#include "instret/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "instret/error.hpp"
#include "instret/util.hpp"
#include "json.hpp"

namespace instret {

namespace {

nlohmann::json spec_to_json(const InstrumentSpec& s) {
    return {{"id", s.id},
            {"family", family_name(s.family)},
            {"harmonic_amplitudes", s.harmonic_amplitudes},
            {"envelope",
             {{"attack_s", s.envelope.attack_s},
              {"decay_s", s.envelope.decay_s},
              {"sustain_level", s.envelope.sustain_level},
              {"release_s", s.envelope.release_s}}},
            {"detune_cents", s.detune_cents},
            {"noise_level", s.noise_level}};
}

nlohmann::json entry_to_json(const ManifestEntry& e) {
    nlohmann::json j = {{"kind", e.kind},
                        {"split", e.split},
                        {"clip", e.clip_path},
                        {"instruments", e.instruments},
                        {"families", e.families},
                        {"seed", e.seed}};
    if (!e.stem_paths.empty()) j["stems"] = e.stem_paths;
    return j;
}

ManifestEntry entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.kind = j.at("kind").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.clip_path = j.at("clip").get<std::string>();
    e.instruments = j.at("instruments").get<std::vector<std::string>>();
    e.families = j.at("families").get<std::vector<std::string>>();
    e.seed = j.at("seed").get<uint64_t>();
    if (j.contains("stems")) e.stem_paths = j.at("stems").get<std::vector<std::string>>();
    return e;
}

}  // namespace

void DatasetConfig::validate() const {
    require(train_instruments >= 1, Err::BadConfig, "need at least one training instrument");
    require(valid_instruments >= 0, Err::BadConfig, "negative validation instrument count");
    require(clips_per_instrument >= 1, Err::BadConfig, "need at least one clip per instrument");
    require(!families.empty(), Err::BadConfig, "family list empty");
    require(multi_min >= 2 && multi_max <= 9 && multi_min <= multi_max, Err::BadConfig,
            "mixture size must satisfy 2 <= min <= max <= 9");
    require(multi_train_entries >= 0 && multi_valid_entries >= 0, Err::BadConfig,
            "negative multi entry count");
    require(workers >= 1, Err::BadConfig, "need at least one worker");
}

std::vector<InstrumentSpec> make_instrument_bank(const std::vector<Family>& families, int count,
                                                 const std::string& id_prefix, Rng& rng) {
    std::vector<InstrumentSpec> bank;
    std::vector<int> family_counter(families.size(), 0);
    for (int i = 0; i < count; ++i) {
        size_t f = static_cast<size_t>(i) % families.size();
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "%s%03d", id_prefix.c_str(), family_counter[f]++);
        std::string id = std::string(family_name(families[f])) + "_" + suffix;
        bank.push_back(make_random_instrument(id, families[f], rng));
    }
    return bank;
}

TrackScore track_for_family(Family family, const std::vector<TrackScore>& midi_tracks,
                            uint64_t seed) {
    Rng rng(seed);
    std::vector<const TrackScore*> candidates;
    for (const auto& t : midi_tracks)
        if (t.family == family && t.events.size() >= 3) candidates.push_back(&t);
    if (!candidates.empty()) {
        // try MIDI sources first; fall back to generated scores when no
        // candidate has a valid 5 s window
        std::vector<int> order = rng.sample_without_replacement(
            static_cast<int>(candidates.size()), static_cast<int>(candidates.size()));
        for (int idx : order) {
            try {
                return excerpt(*candidates[static_cast<size_t>(idx)], rng.next_u64());
            } catch (const Error&) {
                continue;
            }
        }
    }
    return excerpt(random_track(family, rng), rng.next_u64());
}

namespace {

std::vector<TrackScore> load_midi_tracks(const std::filesystem::path& dir) {
    std::vector<TrackScore> tracks;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".mid" || ext == ".midi" || ext == ".smf") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        try {
            auto bytes = read_file(file);
            auto parsed = parse_midi(bytes);
            tracks.insert(tracks.end(), parsed.begin(), parsed.end());
        } catch (const Error&) {
            continue;  // unparseable files are skipped, not fatal
        }
    }
    return tracks;
}

}  // namespace

GeneratedDataset generate_dataset(const DatasetConfig& config) {
    Rng rng(config.seed);
    config.validate();
    return generate_dataset(
        config, make_instrument_bank(config.families, config.train_instruments, "t", rng),
        make_instrument_bank(config.families, config.valid_instruments, "v", rng));
}

GeneratedDataset generate_dataset(const DatasetConfig& config,
                                  std::vector<InstrumentSpec> train_specs,
                                  std::vector<InstrumentSpec> valid_specs) {
    config.validate();
    require(!config.out_dir.empty(), Err::BadConfig, "output directory not set");

    GeneratedDataset out;
    out.train_specs = std::move(train_specs);
    out.valid_specs = std::move(valid_specs);

    std::set<std::string> seen;
    for (const auto& s : out.train_specs) seen.insert(s.id);
    for (const auto& s : out.valid_specs)
        require(seen.insert(s.id).second, Err::OverlappingSplit,
                "instrument id " + s.id + " appears in both splits");

    std::vector<TrackScore> midi_tracks;
    if (config.midi_dir) midi_tracks = load_midi_tracks(*config.midi_dir);

    out.manifest.root = config.out_dir;
    std::filesystem::create_directories(config.out_dir);

    struct SingleTask {
        const InstrumentSpec* spec;
        std::string split;
        int clip_index;
        uint64_t seed;
        std::string rel_path;
    };
    std::vector<SingleTask> single_tasks;
    uint64_t task_counter = 0;
    auto plan_singles = [&](const std::vector<InstrumentSpec>& specs, const char* split) {
        for (const auto& spec : specs) {
            for (int c = 0; c < config.clips_per_instrument; ++c) {
                SingleTask t;
                t.spec = &spec;
                t.split = split;
                t.clip_index = c;
                t.seed = mix_seed(config.seed, task_counter++);
                t.rel_path = "single/" + spec.id + "/" + std::to_string(c) + ".wav";
                single_tasks.push_back(std::move(t));
            }
        }
    };
    plan_singles(out.train_specs, "train");
    plan_singles(out.valid_specs, "valid");

    parallel_for(static_cast<int>(single_tasks.size()), config.workers, [&](int i) {
        const SingleTask& t = single_tasks[static_cast<size_t>(i)];
        TrackScore track = track_for_family(t.spec->family, midi_tracks, t.seed);
        AudioClip clip = render_single(*t.spec, track.events);
        wav_write(config.out_dir / t.rel_path, clip);
    });
    for (const auto& t : single_tasks) {
        ManifestEntry e;
        e.kind = "single";
        e.split = t.split;
        e.clip_path = t.rel_path;
        e.instruments = {t.spec->id};
        e.families = {family_name(t.spec->family)};
        e.seed = t.seed;
        out.manifest.entries.push_back(std::move(e));
    }

    struct MultiTask {
        std::vector<const InstrumentSpec*> specs;
        std::string split;
        uint64_t seed;
        std::string rel_dir;
    };
    std::vector<MultiTask> multi_tasks;
    auto plan_multi = [&](const std::vector<InstrumentSpec>& specs, int entries,
                          const char* split) {
        if (entries == 0) return;
        int max_count = std::min(config.multi_max, static_cast<int>(specs.size()));
        require(max_count >= config.multi_min, Err::PoolTooSmall,
                std::string("not enough ") + split + " instruments for mixtures of " +
                    std::to_string(config.multi_min));
        for (int i = 0; i < entries; ++i) {
            MultiTask t;
            t.seed = mix_seed(config.seed, task_counter++);
            Rng pick(t.seed);
            int count = pick.uniform_int(config.multi_min, max_count);
            for (int idx : pick.sample_without_replacement(static_cast<int>(specs.size()), count))
                t.specs.push_back(&specs[static_cast<size_t>(idx)]);
            t.split = split;
            t.rel_dir = std::string("multi/") + split + "/" + std::to_string(i);
            multi_tasks.push_back(std::move(t));
        }
    };
    plan_multi(out.train_specs, config.multi_train_entries, "train");
    plan_multi(out.valid_specs, config.multi_valid_entries, "valid");

    std::vector<ManifestEntry> multi_entries(multi_tasks.size());
    parallel_for(static_cast<int>(multi_tasks.size()), config.workers, [&](int i) {
        const MultiTask& t = multi_tasks[static_cast<size_t>(i)];
        std::vector<InstrumentSpec> specs;
        std::vector<TrackScore> tracks;
        Rng track_rng(mix_seed(t.seed, 1));
        for (const auto* spec : t.specs) {
            specs.push_back(*spec);
            tracks.push_back(track_for_family(spec->family, midi_tracks, track_rng.next_u64()));
        }
        MultiRender render = render_multi(specs, tracks);

        ManifestEntry e;
        e.kind = "multi";
        e.split = t.split;
        e.clip_path = t.rel_dir + "/mix.wav";
        e.seed = t.seed;
        wav_write(config.out_dir / e.clip_path, render.mixture);
        for (size_t k = 0; k < specs.size(); ++k) {
            std::string stem_path = t.rel_dir + "/stem_" + std::to_string(k) + ".wav";
            wav_write(config.out_dir / stem_path, render.stems[k]);
            e.stem_paths.push_back(stem_path);
            e.instruments.push_back(specs[k].id);
            e.families.push_back(family_name(specs[k].family));
        }
        multi_entries[static_cast<size_t>(i)] = std::move(e);
    });
    for (auto& e : multi_entries) out.manifest.entries.push_back(std::move(e));

    std::string jsonl;
    for (const auto& e : out.manifest.entries) jsonl += entry_to_json(e).dump() + "\n";
    write_file(config.out_dir / "manifest.jsonl", jsonl.data(), jsonl.size());

    nlohmann::json meta;
    meta["seed"] = config.seed;
    meta["clips_per_instrument"] = config.clips_per_instrument;
    meta["sample_rate"] = kSampleRate;
    meta["clip_samples"] = kClipSamples;
    meta["family_mapping"] = "general-midi programs mapped to the 11-family taxonomy; "
                             "see general_midi_family";
    for (const auto& s : out.train_specs) meta["train_instruments"].push_back(spec_to_json(s));
    for (const auto& s : out.valid_specs) meta["valid_instruments"].push_back(spec_to_json(s));
    std::string meta_text = meta.dump(2);
    write_file(config.out_dir / "dataset.json", meta_text.data(), meta_text.size());

    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& jsonl_path) {
    std::ifstream in(jsonl_path);
    require(in.good(), Err::IoError, "cannot open manifest " + jsonl_path.string());
    DatasetManifest manifest;
    manifest.root = jsonl_path.parent_path();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        manifest.entries.push_back(entry_from_json(nlohmann::json::parse(line)));
    }
    for (const auto& e : manifest.entries) {
        require(std::filesystem::exists(manifest.root / e.clip_path), Err::IoError,
                "manifest references missing file " + e.clip_path);
        for (const auto& s : e.stem_paths)
            require(std::filesystem::exists(manifest.root / s), Err::IoError,
                    "manifest references missing stem " + s);
    }
    return manifest;
}

void ClipPool::add(const std::string& id, Family family, AudioClip clip) {
    auto it = std::find(instrument_ids.begin(), instrument_ids.end(), id);
    int slot;
    if (it == instrument_ids.end()) {
        slot = static_cast<int>(instrument_ids.size());
        instrument_ids.push_back(id);
        clips_by_instrument.emplace_back();
    } else {
        slot = static_cast<int>(it - instrument_ids.begin());
    }
    clips_by_instrument[static_cast<size_t>(slot)].push_back(static_cast<int>(entries.size()));
    entries.push_back({id, family, std::move(clip)});
}

ClipPool load_pool(const DatasetManifest& manifest, const std::string& split) {
    ClipPool pool;
    for (const auto& e : manifest.entries) {
        if (e.kind != "single" || e.split != split) continue;
        pool.add(e.instruments[0], family_from_name(e.families[0]),
                 wav_read(manifest.root / e.clip_path));
    }
    return pool;
}

RandomMix random_mix(const ClipPool& pool, uint64_t seed, int min_count, int max_count) {
    require(min_count >= 2 && max_count >= min_count && max_count <= 9, Err::BadConfig,
            "mixture size must satisfy 2 <= min <= max <= 9");
    require(pool.instrument_count() >= max_count, Err::PoolTooSmall,
            "pool has " + std::to_string(pool.instrument_count()) +
                " instruments; need at least " + std::to_string(max_count));

    Rng rng(seed);
    int count = rng.uniform_int(min_count, max_count);
    std::vector<int> chosen = rng.sample_without_replacement(pool.instrument_count(), count);

    RandomMix mix;
    mix.mixture = AudioClip::silence(kClipSamples);
    for (int inst : chosen) {
        const auto& clips = pool.clips_by_instrument[static_cast<size_t>(inst)];
        int pick = clips[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(clips.size()) - 1))];
        mix.instrument_ids.push_back(pool.instrument_ids[static_cast<size_t>(inst)]);
        mix.entry_indices.push_back(pick);
        const AudioClip& clip = pool.entries[static_cast<size_t>(pick)].clip;
        for (size_t i = 0; i < mix.mixture.samples.size() && i < clip.samples.size(); ++i)
            mix.mixture.samples[i] += clip.samples[i];
    }
    peak_normalize(mix.mixture, 0.9);
    return mix;
}

}  // namespace instret
