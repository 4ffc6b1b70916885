#include "instret/retrieval.hpp"

#include <algorithm>
#include <limits>

#include "instret/util.hpp"
#include "json.hpp"

namespace instret {

Family EmbeddingLibrary::family_of(const std::string& id) const {
    for (size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return families[i];
    raise(Err::UnknownId, "instrument " + id + " not in library");
}

EmbeddingLibrary build_library(const EncoderParams& single, const std::vector<LibraryClips>& clips,
                               const std::string& checkpoint_hash) {
    require(!clips.empty(), Err::EmptyLibrary, "no library instruments");
    require(!single.config.is_multi(), Err::FrozenEncoderMissing,
            "library embeddings come from the single encoder");

    EmbeddingLibrary lib;
    lib.checkpoint_hash = checkpoint_hash;
    lib.vectors = Matrix(static_cast<int>(clips.size()), single.config.embed_dim);

    std::set<std::string> seen;
    for (size_t k = 0; k < clips.size(); ++k) {
        const auto& inst = clips[k];
        require(!inst.mels.empty(), Err::EmptyLibrary,
                "instrument " + inst.id + " has no library clips");
        require(seen.insert(inst.id).second, Err::BadConfig,
                "duplicate library instrument " + inst.id);
        lib.ids.push_back(inst.id);
        lib.families.push_back(inst.family);

        std::vector<double> mean(static_cast<size_t>(single.config.embed_dim), 0.0);
        for (const auto& mel : inst.mels) {
            std::vector<double> emb = single_embedding(single, mel);
            for (size_t i = 0; i < mean.size(); ++i) mean[i] += emb[i];
        }
        for (size_t i = 0; i < mean.size(); ++i)
            mean[i] /= static_cast<double>(inst.mels.size());
        guard_nonzero(mean);
        for (int i = 0; i < lib.vectors.cols; ++i)
            lib.vectors.at(static_cast<int>(k), i) = mean[static_cast<size_t>(i)];
    }
    return lib;
}

Matrix similarity_matrix(const Matrix& outputs, const EmbeddingLibrary& library) {
    require(outputs.cols == library.dim(), Err::ShapeMismatch,
            "output embedding width differs from library");
    Matrix sim(outputs.rows, library.count());
    for (int j = 0; j < outputs.rows; ++j) {
        std::span<const double> o{&outputs.values[static_cast<size_t>(j) * outputs.cols],
                                  static_cast<size_t>(outputs.cols)};
        for (int k = 0; k < library.count(); ++k) {
            std::span<const double> l{
                &library.vectors.values[static_cast<size_t>(k) * library.dim()],
                static_cast<size_t>(library.dim())};
            sim.at(j, k) = cosine(o, l);
        }
    }
    return sim;
}

RetrievalResult retrieve(const Matrix& sim, const std::vector<std::string>& library_ids) {
    require(static_cast<size_t>(sim.cols) == library_ids.size(), Err::ShapeMismatch,
            "similarity columns differ from library size");
    require(sim.rows >= 1 && sim.cols >= 1, Err::ShapeMismatch, "empty similarity matrix");

    RetrievalResult result;
    result.instrument_scores.assign(static_cast<size_t>(sim.cols),
                                    -std::numeric_limits<double>::infinity());
    for (int j = 0; j < sim.rows; ++j) {
        int best = 0;
        for (int k = 1; k < sim.cols; ++k)
            if (sim.at(j, k) > sim.at(j, best)) best = k;  // ties keep the lowest index
        result.per_slot.push_back({best, library_ids[static_cast<size_t>(best)], sim.at(j, best)});
        result.retrieved.insert(library_ids[static_cast<size_t>(best)]);
        for (int k = 0; k < sim.cols; ++k)
            result.instrument_scores[static_cast<size_t>(k)] =
                std::max(result.instrument_scores[static_cast<size_t>(k)], sim.at(j, k));
    }
    return result;
}

RetrievalResult query(const EncoderParams& multi, const EmbeddingLibrary& library,
                      const AudioClip& mixture, const MelConfig& mel_config) {
    require(multi.config.is_multi(), Err::ShapeMismatch, "query needs the multi encoder");
    MelSpectrogram mel = log_mel(mixture, mel_config);
    Matrix outputs = forward_multi(multi, mel.values, multi.config.slots);
    // rows can be exactly zero only for a degenerate untrained net; keep the
    // cosine defined anyway
    for (int j = 0; j < outputs.rows; ++j) {
        bool all_zero = true;
        for (int k = 0; k < outputs.cols; ++k)
            if (outputs.at(j, k) != 0.0) {
                all_zero = false;
                break;
            }
        if (all_zero) outputs.at(j, 0) = 1e-9;
    }
    Matrix sim = similarity_matrix(outputs, library);
    return retrieve(sim, library.ids);
}

namespace {
constexpr char kLibraryMagic[4] = {'I', 'R', 'L', 'B'};
}

void save_library(const std::filesystem::path& path, const EmbeddingLibrary& library) {
    nlohmann::json header;
    header["ids"] = library.ids;
    std::vector<std::string> family_names;
    for (Family f : library.families) family_names.push_back(family_name(f));
    header["families"] = family_names;
    header["dim"] = library.dim();
    header["checkpoint_hash"] = library.checkpoint_hash;
    header["clips"] = library.clip_list;

    std::vector<float> payload(library.vectors.values.begin(), library.vectors.values.end());
    write_blob(path, kLibraryMagic, header.dump(), payload);
}

EmbeddingLibrary load_library(const std::filesystem::path& path) {
    auto [json_text, payload] = read_blob(path, kLibraryMagic);
    nlohmann::json header = nlohmann::json::parse(json_text);

    EmbeddingLibrary lib;
    lib.ids = header["ids"].get<std::vector<std::string>>();
    for (const auto& name : header["families"].get<std::vector<std::string>>())
        lib.families.push_back(family_from_name(name));
    lib.checkpoint_hash = header["checkpoint_hash"].get<std::string>();
    if (header.contains("clips")) lib.clip_list = header["clips"].get<std::vector<std::string>>();

    int dim = header["dim"].get<int>();
    require(!lib.ids.empty(), Err::EmptyLibrary, "library file has no entries");
    require(payload.size() == lib.ids.size() * static_cast<size_t>(dim), Err::IoError,
            "library payload size mismatch");
    lib.vectors = Matrix(static_cast<int>(lib.ids.size()), dim);
    for (size_t i = 0; i < payload.size(); ++i) lib.vectors.values[i] = payload[i];
    return lib;
}

void dump_embeddings(const std::filesystem::path& matrix_path,
                     const std::vector<std::string>& ids, const Matrix& vectors) {
    require(static_cast<size_t>(vectors.rows) == ids.size(), Err::LengthMismatch,
            "id count differs from embedding rows");
    std::vector<float> payload(vectors.values.begin(), vectors.values.end());
    nlohmann::json header = {{"rows", vectors.rows}, {"cols", vectors.cols}};
    constexpr char magic[4] = {'I', 'R', 'E', 'M'};
    write_blob(matrix_path, magic, header.dump(), payload);

    nlohmann::json sidecar = {{"ids", ids}};
    auto sidecar_path = matrix_path;
    sidecar_path += ".ids.json";
    std::string text = sidecar.dump(2);
    write_file(sidecar_path, text.data(), text.size());
}

}  // namespace instret
