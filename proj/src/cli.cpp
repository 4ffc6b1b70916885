#include "instret/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>

#include "CLI11.hpp"
#include "instret/dataset.hpp"
#include "instret/metrics.hpp"
#include "instret/train.hpp"
#include "instret/util.hpp"
#include "json.hpp"

namespace instret {

namespace {

struct MelOptions {
    int fft_size = 1024;
    int hop = 512;
    int mel_bins = 64;

    void attach(CLI::App* cmd) {
        cmd->add_option("--fft-size", fft_size, "STFT size (power of two)");
        cmd->add_option("--hop", hop, "STFT hop in samples");
        cmd->add_option("--mel-bins", mel_bins, "mel filterbank size");
    }

    MelConfig config() const {
        MelConfig c;
        c.fft_size = fft_size;
        c.hop = hop;
        c.mel_bins = mel_bins;
        c.validate();
        return c;
    }
};

void guard_overwrite(const std::filesystem::path& path, bool force) {
    require(force || !std::filesystem::exists(path), Err::BadConfig,
            path.string() + " exists; pass --force to overwrite");
}

void write_snapshot(const CLI::App& app, const std::filesystem::path& target) {
    std::string text = app.config_to_str(true, true);
    write_file(target, text.data(), text.size());
}

std::filesystem::path sibling_snapshot(const std::filesystem::path& out_file) {
    auto p = out_file;
    p += ".config.ini";
    return p;
}

std::vector<Family> parse_families(const std::string& csv) {
    std::vector<Family> out;
    size_t pos = 0;
    while (pos <= csv.size()) {
        size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        std::string name = csv.substr(pos, comma - pos);
        if (!name.empty()) out.push_back(family_from_name(name));
        pos = comma + 1;
    }
    require(!out.empty(), Err::BadConfig, "family list empty");
    return out;
}

// labels ordered by first appearance of instrument ids in the train split
LabeledDataset load_labeled_singles(const DatasetManifest& manifest, const std::string& split,
                                    const MelConfig& mel_config, int workers,
                                    std::vector<std::string>& label_ids) {
    std::vector<const ManifestEntry*> picked;
    for (const auto& e : manifest.entries)
        if (e.kind == "single" && e.split == split) picked.push_back(&e);
    require(!picked.empty(), Err::EmptyDataset,
            "manifest has no single-instrument clips for split " + split);

    LabeledDataset ds;
    std::map<std::string, int> label_of;
    for (const auto* e : picked) {
        auto [it, inserted] = label_of.try_emplace(e->instruments[0],
                                                   static_cast<int>(label_ids.size()));
        if (inserted) label_ids.push_back(e->instruments[0]);
        ds.labels.push_back(it->second);
    }
    ds.num_classes = static_cast<int>(label_ids.size());
    ds.mels.resize(picked.size());
    parallel_for(static_cast<int>(picked.size()), workers, [&](int i) {
        AudioClip clip = wav_read(manifest.root / picked[static_cast<size_t>(i)]->clip_path);
        ds.mels[static_cast<size_t>(i)] = log_mel(clip, mel_config).values;
    });
    return ds;
}

int cmd_synth(CLI::App& app, DatasetConfig& config, const std::string& families_csv, bool force) {
    config.families = parse_families(families_csv);
    guard_overwrite(config.out_dir / "manifest.jsonl", force);
    GeneratedDataset ds = generate_dataset(config);
    write_snapshot(app, config.out_dir / "config_snapshot.ini");
    std::cout << "wrote " << ds.manifest.entries.size() << " entries under "
              << config.out_dir.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string stage;
    std::filesystem::path data;
    std::filesystem::path out_dir;
    std::filesystem::path single_checkpoint;
    std::string mix = "manifest";
    std::string preset = "small";
    int epochs = 10;
    int batch = 0;  // 0 = stage default (32 single / 128 multi)
    double lr = 0.001;
    int embed_dim = 1024;
    int slots = 9;
    int batches_per_epoch = 50;
    int multi_min = 2, multi_max = 9;
    uint64_t seed = 0;
    int workers = 1;
    bool force = false;
    MelOptions mel;
};

int cmd_train(CLI::App& app, const TrainArgs& args) {
    MelConfig mel_config = args.mel.config();
    DatasetManifest manifest = load_manifest(args.data);
    std::filesystem::create_directories(args.out_dir);

    EncoderConfig enc = EncoderConfig::preset(args.preset);
    enc.embed_dim = args.embed_dim;
    enc.input_frames = mel_config.frame_count(kClipSamples);
    enc.input_bins = mel_config.mel_bins;

    if (args.stage == "single") {
        auto ckpt_path = args.out_dir / "single.ckpt";
        guard_overwrite(ckpt_path, args.force);

        std::vector<std::string> label_ids;
        LabeledDataset ds =
            load_labeled_singles(manifest, "train", mel_config, args.workers, label_ids);

        TrainSingleConfig tc;
        tc.epochs = args.epochs;
        tc.batch_size = args.batch > 0 ? args.batch : 32;
        tc.lr = args.lr;
        tc.seed = args.seed;
        tc.workers = args.workers;
        TrainSingleResult result = train_single(ds, enc, tc);

        save_checkpoint(ckpt_path, result.params, &result.head);
        write_metrics_csv(args.out_dir / "metrics.csv", result.metrics);
        nlohmann::json labels = {{"labels", label_ids}};
        std::string text = labels.dump(2);
        write_file(args.out_dir / "labels.json", text.data(), text.size());
        write_snapshot(app, args.out_dir / "config_snapshot.ini");
        std::cout << "single encoder trained: final accuracy " << result.final_accuracy
                  << ", checkpoint " << ckpt_path.string() << "\n";
        return 0;
    }

    require(args.stage == "multi", Err::BadConfig, "--stage must be single or multi");
    require(!args.single_checkpoint.empty(), Err::BadConfig,
            "--single-checkpoint is required for the multi stage");
    require(std::filesystem::exists(args.single_checkpoint), Err::FrozenEncoderMissing,
            "single checkpoint not found: " + args.single_checkpoint.string());
    auto ckpt_path = args.out_dir / "multi.ckpt";
    guard_overwrite(ckpt_path, args.force);

    Checkpoint single = load_checkpoint(args.single_checkpoint);
    require(!single.params.config.is_multi(), Err::FrozenEncoderMissing,
            args.single_checkpoint.string() + " is not a single-encoder checkpoint");
    auto embed = frozen_embedder(single.params);

    EncoderConfig multi_enc = enc;
    multi_enc.embed_dim = single.params.config.embed_dim;
    multi_enc.slots = args.slots;

    TrainMultiConfig tc;
    tc.epochs = args.epochs;
    tc.batch_size = args.batch > 0 ? args.batch : 128;
    tc.batches_per_epoch = args.batches_per_epoch;
    tc.lr = args.lr;
    tc.seed = args.seed;
    tc.workers = args.workers;

    MixSampler sampler;
    if (args.mix == "random") {
        auto pool = std::make_shared<ClipPool>(load_pool(manifest, "train"));
        // embeddings per pool clip are frozen; compute once
        auto targets = std::make_shared<std::vector<std::vector<double>>>(pool->entries.size());
        parallel_for(static_cast<int>(pool->entries.size()), args.workers, [&](int i) {
            (*targets)[static_cast<size_t>(i)] =
                embed(log_mel(pool->entries[static_cast<size_t>(i)].clip, mel_config).values);
        });
        uint64_t seed = args.seed;
        int lo = args.multi_min, hi = std::min(args.multi_max, args.slots);
        sampler = [pool, targets, mel_config, seed, lo, hi](uint64_t draw) {
            RandomMix mix = random_mix(*pool, mix_seed(seed, draw), lo, hi);
            MultiExample ex;
            ex.mixture_mel = log_mel(mix.mixture, mel_config).values;
            ex.targets = Matrix(static_cast<int>(mix.entry_indices.size()),
                                static_cast<int>((*targets)[0].size()));
            for (size_t n = 0; n < mix.entry_indices.size(); ++n) {
                const auto& t = (*targets)[static_cast<size_t>(mix.entry_indices[n])];
                for (size_t d = 0; d < t.size(); ++d)
                    ex.targets.at(static_cast<int>(n), static_cast<int>(d)) = t[d];
            }
            return ex;
        };
    } else {
        require(args.mix == "manifest", Err::BadConfig, "--mix must be manifest or random");
        auto examples = std::make_shared<std::vector<MultiExample>>();
        std::vector<const ManifestEntry*> picked;
        for (const auto& e : manifest.entries)
            if (e.kind == "multi" && e.split == "train") picked.push_back(&e);
        require(!picked.empty(), Err::EmptyDataset, "manifest has no multi entries to train on");
        examples->resize(picked.size());
        parallel_for(static_cast<int>(picked.size()), args.workers, [&](int i) {
            const ManifestEntry& e = *picked[static_cast<size_t>(i)];
            MultiExample ex;
            ex.mixture_mel = log_mel(wav_read(manifest.root / e.clip_path), mel_config).values;
            std::vector<std::vector<double>> stems;
            for (const auto& stem : e.stem_paths)
                stems.push_back(embed(log_mel(wav_read(manifest.root / stem), mel_config).values));
            ex.targets = Matrix(static_cast<int>(stems.size()), static_cast<int>(stems[0].size()));
            for (size_t n = 0; n < stems.size(); ++n)
                for (size_t d = 0; d < stems[n].size(); ++d)
                    ex.targets.at(static_cast<int>(n), static_cast<int>(d)) = stems[n][d];
            (*examples)[static_cast<size_t>(i)] = std::move(ex);
        });
        sampler = [examples](uint64_t draw) {
            return (*examples)[static_cast<size_t>(draw % examples->size())];
        };
    }

    TrainMultiResult result = train_multi(sampler, multi_enc, tc);
    save_checkpoint(ckpt_path, result.params, nullptr);
    write_metrics_csv(args.out_dir / "metrics.csv", result.metrics);
    write_snapshot(app, args.out_dir / "config_snapshot.ini");
    std::cout << "multi encoder trained: final loss " << result.metrics.back().loss
              << ", checkpoint " << ckpt_path.string() << "\n";
    return 0;
}

struct LibraryArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path out;
    std::filesystem::path dump;
    std::string split = "train";
    int clips_per_instrument = 0;  // 0 = all
    int workers = 1;
    bool force = false;
    MelOptions mel;
};

int cmd_library(CLI::App& app, const LibraryArgs& args) {
    MelConfig mel_config = args.mel.config();
    guard_overwrite(args.out, args.force);

    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    require(!ckpt.params.config.is_multi(), Err::FrozenEncoderMissing,
            "library building needs the single-encoder checkpoint");
    DatasetManifest manifest = load_manifest(args.data);

    std::map<std::string, LibraryClips> grouped;
    std::vector<std::string> order;
    std::vector<std::string> clip_list;
    for (const auto& e : manifest.entries) {
        if (e.kind != "single" || e.split != args.split) continue;
        auto [it, inserted] = grouped.try_emplace(e.instruments[0]);
        if (inserted) {
            it->second.id = e.instruments[0];
            it->second.family = family_from_name(e.families[0]);
            order.push_back(e.instruments[0]);
        }
        if (args.clips_per_instrument > 0 &&
            static_cast<int>(it->second.mels.size()) >= args.clips_per_instrument)
            continue;
        it->second.mels.push_back(
            log_mel(wav_read(manifest.root / e.clip_path), mel_config).values);
        clip_list.push_back(e.clip_path);
    }
    require(!order.empty(), Err::EmptyLibrary, "no clips for split " + args.split);

    std::vector<LibraryClips> clips;
    for (const auto& id : order) clips.push_back(std::move(grouped[id]));
    EmbeddingLibrary lib = build_library(ckpt.params, clips, hex64(ckpt.source_hash));
    lib.clip_list = clip_list;
    save_library(args.out, lib);
    write_snapshot(app, sibling_snapshot(args.out));
    if (!args.dump.empty()) dump_embeddings(args.dump, lib.ids, lib.vectors);
    std::cout << "library with " << lib.count() << " instruments -> " << args.out.string() << "\n";
    return 0;
}

struct QueryArgs {
    std::filesystem::path mixture;
    std::filesystem::path library;
    std::filesystem::path checkpoint;
    std::filesystem::path out;
    int top = 1;
    bool force = false;
    MelOptions mel;
};

int cmd_query(CLI::App& app, const QueryArgs& args) {
    MelConfig mel_config = args.mel.config();
    require(args.top >= 1, Err::BadConfig, "--top must be at least 1");

    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    require(ckpt.params.config.is_multi(), Err::FrozenEncoderMissing,
            "query needs the multi-encoder checkpoint");
    EmbeddingLibrary lib = load_library(args.library);
    AudioClip mixture = wav_read(args.mixture);

    MelSpectrogram mel = log_mel(mixture, mel_config);
    Matrix outputs = forward_multi(ckpt.params, mel.values, ckpt.params.config.slots);
    for (int j = 0; j < outputs.rows; ++j) {
        bool all_zero = true;
        for (int k = 0; k < outputs.cols; ++k)
            if (outputs.at(j, k) != 0.0) all_zero = false;
        if (all_zero) outputs.at(j, 0) = 1e-9;
    }
    Matrix sim = similarity_matrix(outputs, lib);
    RetrievalResult result = retrieve(sim, lib.ids);

    nlohmann::json j;
    j["retrieved"] = std::vector<std::string>(result.retrieved.begin(), result.retrieved.end());
    nlohmann::json slots = nlohmann::json::array();
    for (int row = 0; row < sim.rows; ++row) {
        std::vector<int> idx(static_cast<size_t>(sim.cols));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return sim.at(row, a) > sim.at(row, b); });
        nlohmann::json picks = nlohmann::json::array();
        for (int r = 0; r < std::min(args.top, sim.cols); ++r)
            picks.push_back({{"id", lib.ids[static_cast<size_t>(idx[static_cast<size_t>(r)])]},
                             {"similarity", sim.at(row, idx[static_cast<size_t>(r)])}});
        slots.push_back({{"slot", row}, {"picks", picks}});
    }
    j["per_slot"] = slots;
    nlohmann::json scores;
    for (size_t k = 0; k < lib.ids.size(); ++k) scores[lib.ids[k]] = result.instrument_scores[k];
    j["instrument_scores"] = scores;
    j["provenance"] = {{"library_checkpoint_hash", lib.checkpoint_hash},
                       {"multi_checkpoint_hash", hex64(ckpt.source_hash)}};

    std::string text = j.dump(2);
    if (args.out.empty()) {
        std::cout << text << "\n";
    } else {
        guard_overwrite(args.out, args.force);
        write_file(args.out, text.data(), text.size());
        write_snapshot(app, sibling_snapshot(args.out));
        std::cout << "query result -> " << args.out.string() << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::string protocol;
    std::filesystem::path checkpoint;        // single (eer)
    std::filesystem::path multi_checkpoint;  // retrieval
    std::filesystem::path library;           // retrieval
    std::filesystem::path data;
    std::filesystem::path out;
    std::string split = "valid";
    int chance_trials = 10;
    uint64_t seed = 0;
    int workers = 1;
    bool per_class = false;
    bool force = false;
    MelOptions mel;
};

int cmd_eval(CLI::App& app, const EvalArgs& args) {
    MelConfig mel_config = args.mel.config();
    if (!args.out.empty()) guard_overwrite(args.out, args.force);
    DatasetManifest manifest = load_manifest(args.data);
    nlohmann::json j;

    if (args.protocol == "eer") {
        require(!args.checkpoint.empty(), Err::BadConfig, "--checkpoint (single) is required");
        Checkpoint ckpt = load_checkpoint(args.checkpoint);
        require(!ckpt.params.config.is_multi(), Err::FrozenEncoderMissing,
                "verification needs the single-encoder checkpoint");

        std::vector<const ManifestEntry*> picked;
        for (const auto& e : manifest.entries)
            if (e.kind == "single" && e.split == args.split) picked.push_back(&e);
        require(!picked.empty(), Err::EmptyDataset, "no clips for split " + args.split);

        std::vector<std::vector<double>> embs(picked.size());
        parallel_for(static_cast<int>(picked.size()), args.workers, [&](int i) {
            AudioClip clip = wav_read(manifest.root / picked[static_cast<size_t>(i)]->clip_path);
            embs[static_cast<size_t>(i)] =
                single_embedding(ckpt.params, log_mel(clip, mel_config).values);
        });

        std::vector<std::string> ids;
        std::vector<std::vector<std::vector<double>>> grouped;
        std::map<std::string, size_t> slot;
        for (size_t i = 0; i < picked.size(); ++i) {
            const std::string& id = picked[i]->instruments[0];
            auto [it, inserted] = slot.try_emplace(id, ids.size());
            if (inserted) {
                ids.push_back(id);
                grouped.emplace_back();
            }
            grouped[it->second].push_back(std::move(embs[i]));
        }

        EerReport report = eer(make_verification_trials(ids, grouped, args.seed));
        j["protocol"] = "eer";
        j["mean_eer"] = report.mean_eer;
        j["anti_correlated_warning"] = report.anti_correlated_warning;
        if (args.per_class) j["per_instrument"] = report.per_instrument;
        j["provenance"] = {{"checkpoint_hash", hex64(ckpt.source_hash)}};
    } else {
        require(args.protocol == "retrieval", Err::BadConfig,
                "--protocol must be eer or retrieval");
        require(!args.multi_checkpoint.empty() && !args.library.empty(), Err::BadConfig,
                "--multi-checkpoint and --library are required");
        Checkpoint ckpt = load_checkpoint(args.multi_checkpoint);
        require(ckpt.params.config.is_multi(), Err::FrozenEncoderMissing,
                "retrieval needs the multi-encoder checkpoint");
        EmbeddingLibrary lib = load_library(args.library);

        std::vector<const ManifestEntry*> picked;
        for (const auto& e : manifest.entries)
            if (e.kind == "multi" && e.split == args.split) picked.push_back(&e);
        require(!picked.empty(), Err::EmptyDataset,
                "no multi entries for split " + args.split);

        std::vector<IdSet> truths(picked.size()), predictions(picked.size());
        std::vector<std::vector<double>> scores(picked.size());
        parallel_for(static_cast<int>(picked.size()), args.workers, [&](int i) {
            const ManifestEntry& e = *picked[static_cast<size_t>(i)];
            truths[static_cast<size_t>(i)] = IdSet(e.instruments.begin(), e.instruments.end());
            RetrievalResult r =
                query(ckpt.params, lib, wav_read(manifest.root / e.clip_path), mel_config);
            predictions[static_cast<size_t>(i)] = r.retrieved;
            scores[static_cast<size_t>(i)] = r.instrument_scores;
        });

        std::map<std::string, std::string> id_to_family;
        for (size_t k = 0; k < lib.ids.size(); ++k)
            id_to_family[lib.ids[k]] = family_name(lib.families[k]);

        MetricReport model =
            retrieval_report(predictions, truths, scores, lib.ids, id_to_family);
        MetricReport chance = chance_baseline(truths, lib.ids, id_to_family,
                                              ckpt.params.config.slots, args.seed,
                                              args.chance_trials);

        j["protocol"] = "retrieval";
        j["model"] = nlohmann::json::parse(model.to_json(args.per_class));
        j["chance"] = nlohmann::json::parse(chance.to_json(false));
        j["queries"] = picked.size();
        j["provenance"] = {{"multi_checkpoint_hash", hex64(ckpt.source_hash)},
                           {"library_checkpoint_hash", lib.checkpoint_hash}};
    }

    std::string text = j.dump(2);
    if (args.out.empty()) {
        std::cout << text << "\n";
    } else {
        write_file(args.out, text.data(), text.size());
        write_snapshot(app, sibling_snapshot(args.out));
        std::cout << "report -> " << args.out.string() << "\n";
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"musical-instrument retrieval toolkit: dataset synthesis, encoder "
                 "training, embedding libraries, retrieval and evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file; flags override");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // synth
    auto* synth = app.add_subcommand("synth", "render a single/multi instrument dataset");
    DatasetConfig synth_config;
    std::string families_csv = "guitar,organ,flute,string";
    bool synth_force = false;
    synth->add_option("--out", synth_config.out_dir, "output directory")->required();
    synth->add_option("--instruments", synth_config.train_instruments, "training instruments");
    synth->add_option("--valid-instruments", synth_config.valid_instruments,
                      "held-out instruments");
    synth->add_option("--per-instrument", synth_config.clips_per_instrument,
                      "clips per instrument");
    synth->add_option("--families", families_csv, "comma-separated family names");
    synth->add_option("--multi", synth_config.multi_train_entries, "multi mixtures (train)");
    synth->add_option("--multi-valid", synth_config.multi_valid_entries,
                      "multi mixtures (valid)");
    synth->add_option("--multi-min", synth_config.multi_min, "min instruments per mixture");
    synth->add_option("--multi-max", synth_config.multi_max, "max instruments per mixture");
    synth->add_option("--seed", synth_config.seed, "generation seed");
    std::string midi_dir;
    synth->add_option("--midi-dir", midi_dir, "render excerpts from MIDI files in this directory");
    synth->add_option("--workers", synth_config.workers, "parallel render workers");
    synth->add_flag("--force", synth_force, "overwrite existing outputs");

    // train
    auto* train = app.add_subcommand("train", "train the single or multi encoder");
    TrainArgs train_args;
    train->add_option("--stage", train_args.stage, "single|multi")->required();
    train->add_option("--data", train_args.data, "manifest.jsonl")->required();
    train->add_option("--out", train_args.out_dir, "output directory")->required();
    train->add_option("--epochs", train_args.epochs, "training epochs");
    train->add_option("--batch", train_args.batch, "batch size (default 32 single / 128 multi)");
    train->add_option("--lr", train_args.lr, "Adam learning rate");
    train->add_option("--embed-dim", train_args.embed_dim, "embedding width D");
    train->add_option("--preset", train_args.preset, "encoder preset: small|large");
    train->add_option("--slots", train_args.slots, "output embeddings M (multi)");
    train->add_option("--mix", train_args.mix, "multi data source: manifest|random");
    train->add_option("--batches-per-epoch", train_args.batches_per_epoch,
                      "batches per epoch (multi)");
    train->add_option("--single-checkpoint", train_args.single_checkpoint,
                      "frozen single encoder (multi stage)");
    train->add_option("--multi-min", train_args.multi_min, "min instruments per random mix");
    train->add_option("--multi-max", train_args.multi_max, "max instruments per random mix");
    train->add_option("--seed", train_args.seed, "training seed");
    train->add_option("--workers", train_args.workers, "parallel batch workers");
    train->add_flag("--force", train_args.force, "overwrite existing outputs");
    train_args.mel.attach(train);

    // library
    auto* library = app.add_subcommand("library", "build the instrument embedding library");
    LibraryArgs lib_args;
    library->add_option("--checkpoint", lib_args.checkpoint, "single-encoder checkpoint")
        ->required();
    library->add_option("--data", lib_args.data, "manifest.jsonl")->required();
    library->add_option("--out", lib_args.out, "library file")->required();
    library->add_option("--split", lib_args.split, "manifest split to index (train|valid)");
    library->add_option("--clips-per-instrument", lib_args.clips_per_instrument,
                        "clips averaged per instrument (0 = all)");
    library->add_option("--dump-embeddings", lib_args.dump,
                        "also dump raw embeddings + id sidecar for plotting");
    library->add_option("--workers", lib_args.workers, "parallel workers");
    library->add_flag("--force", lib_args.force, "overwrite existing outputs");
    lib_args.mel.attach(library);

    // query
    auto* query_cmd = app.add_subcommand("query", "retrieve instruments for a mixture clip");
    QueryArgs query_args;
    query_cmd->add_option("--mixture", query_args.mixture, "mixture WAV")->required();
    query_cmd->add_option("--library", query_args.library, "embedding library file")->required();
    query_cmd->add_option("--checkpoint", query_args.checkpoint, "multi-encoder checkpoint")
        ->required();
    query_cmd->add_option("--out", query_args.out, "result JSON (stdout when omitted)");
    query_cmd->add_option("--top", query_args.top, "per-slot candidates to list");
    query_cmd->add_flag("--force", query_args.force, "overwrite existing outputs");
    query_args.mel.attach(query_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "run the verification or retrieval protocol");
    EvalArgs eval_args;
    eval_cmd->add_option("--protocol", eval_args.protocol, "eer|retrieval")->required();
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "single checkpoint (eer)");
    eval_cmd->add_option("--multi-checkpoint", eval_args.multi_checkpoint,
                         "multi checkpoint (retrieval)");
    eval_cmd->add_option("--library", eval_args.library, "embedding library (retrieval)");
    eval_cmd->add_option("--data", eval_args.data, "manifest.jsonl")->required();
    eval_cmd->add_option("--out", eval_args.out, "report JSON (stdout when omitted)");
    eval_cmd->add_option("--split", eval_args.split, "manifest split to evaluate");
    eval_cmd->add_option("--chance-trials", eval_args.chance_trials,
                         "repeats for the chance baseline");
    eval_cmd->add_option("--seed", eval_args.seed, "evaluation seed");
    eval_cmd->add_option("--workers", eval_args.workers, "parallel workers");
    eval_cmd->add_flag("--per-class", eval_args.per_class, "include per-class rows");
    eval_cmd->add_flag("--force", eval_args.force, "overwrite existing outputs");
    eval_args.mel.attach(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            if (!midi_dir.empty()) synth_config.midi_dir = midi_dir;
            return cmd_synth(app, synth_config, families_csv, synth_force);
        }
        if (train->parsed()) return cmd_train(app, train_args);
        if (library->parsed()) return cmd_library(app, lib_args);
        if (query_cmd->parsed()) return cmd_query(app, query_args);
        if (eval_cmd->parsed()) return cmd_eval(app, eval_args);
    } catch (const Error& e) {
        bool usage = e.code() == Err::BadConfig || e.code() == Err::OverlappingSplit ||
                     e.code() == Err::EmptyDataset || e.code() == Err::FrozenEncoderMissing;
        std::cerr << "error: " << e.what() << "\n";
        return usage ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace instret
