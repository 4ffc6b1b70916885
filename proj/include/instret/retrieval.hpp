#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "instret/encoder.hpp"
#include "instret/pit.hpp"
#include "instret/score.hpp"

namespace instret {

// Precomputed instrument embeddings, one entry per library instrument. With
// several clips per instrument the entry is the mean embedding.
struct EmbeddingLibrary {
    std::vector<std::string> ids;
    std::vector<Family> families;
    Matrix vectors;  // K x D
    std::string checkpoint_hash;
    std::vector<std::string> clip_list;

    int count() const { return vectors.rows; }
    int dim() const { return vectors.cols; }
    Family family_of(const std::string& id) const;
};

struct LibraryClips {
    std::string id;
    Family family = Family::Keyboard;
    std::vector<Matrix> mels;  // at least one log-mel per instrument
};

EmbeddingLibrary build_library(const EncoderParams& single, const std::vector<LibraryClips>& clips,
                               const std::string& checkpoint_hash = "");

// M x K cosine similarities between output rows and library entries
Matrix similarity_matrix(const Matrix& outputs, const EmbeddingLibrary& library);

struct RetrievalResult {
    std::set<std::string> retrieved;  // R: union of per-slot picks
    struct SlotPick {
        int library_index;
        std::string id;
        double similarity;
    };
    std::vector<SlotPick> per_slot;          // one per output slot
    std::vector<double> instrument_scores;   // K entries: max similarity over slots
};

// per-slot argmax with ties broken to the lowest library index
RetrievalResult retrieve(const Matrix& sim, const std::vector<std::string>& library_ids);

// full inference path: log_mel -> forward_multi -> similarity -> retrieve
RetrievalResult query(const EncoderParams& multi, const EmbeddingLibrary& library,
                      const AudioClip& mixture, const MelConfig& mel_config);

void save_library(const std::filesystem::path& path, const EmbeddingLibrary& library);
EmbeddingLibrary load_library(const std::filesystem::path& path);

// float32 matrix + JSON id sidecar, for external 2-D visualization
void dump_embeddings(const std::filesystem::path& matrix_path,
                     const std::vector<std::string>& ids, const Matrix& vectors);

}  // namespace instret
