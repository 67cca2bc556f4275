// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file corpus.hpp
 *  \brief Text collections, embedding matrices and the record formats shared
 *         by every pipeline stage.
 *
 * Binary matrix layout (little-endian):
 *
 *     "SDEM" | version u32 = 1 | dim u32 | row_count u64
 *     row_count x ( id_len u16 | id bytes (UTF-8) | dim x f32 )
 *
 * Collections and pair records are JSON Lines, one object per line.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sdft {

inline constexpr char kMatrixMagic[4] = {'S', 'D', 'E', 'M'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::uint64_t kMaxMatrixDim = 0x7fffffffULL;

bool is_valid_utf8(std::string_view bytes) noexcept;

struct TextItem {
    std::string text_id;
    std::string text;
    std::int64_t group_id = 0;
};

/// Ordered set of texts keyed by a unique, opaque text_id.
class TextCollection {
public:
    /// Throws on duplicate id, negative group or invalid UTF-8.
    void add(TextItem item);

    const TextItem* find(std::string_view text_id) const;
    const TextItem& at(std::string_view text_id) const;
    bool contains(std::string_view text_id) const { return find(text_id) != nullptr; }

    const std::vector<TextItem>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }

private:
    std::vector<TextItem> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Dense float vectors for one model, keyed by text_id, in insertion order.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(std::string model_id, std::size_t dim);

    /// Appends a row. Rejects wrong length, non-finite entries, duplicate ids
    /// and ids longer than 65535 bytes.
    void add_row(std::string_view text_id, std::span<const float> values);

    /// Throws ErrorCode::kMissingEmbedding when absent.
    std::span<const float> row(std::string_view text_id) const;
    std::optional<std::span<const float>> find(std::string_view text_id) const;

    std::span<const float> row_at(std::size_t index) const;
    const std::string& id_at(std::size_t index) const { return ids_.at(index); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& model_id() const noexcept { return model_id_; }
    void set_model_id(std::string model_id) { model_id_ = std::move(model_id); }

    /// Same dim, same ids in the same order, bitwise-equal payload.
    /// model_id is not part of the file format and is ignored.
    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

private:
    std::string model_id_;
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

void write_matrix(const EmbeddingMatrix& matrix, std::ostream& out);
EmbeddingMatrix read_matrix(std::istream& in, std::string model_id = {});

/// File helpers; load_matrix names the model after the file stem unless given.
void save_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path, std::string model_id = {});

/// Cosine similarity accumulated in double and clamped to [-1, 1].
/// Throws kDimension on length mismatch and kDegenerateVector on a zero norm.
double cosine(std::span<const float> u, std::span<const float> v);

// ---------------------------------------------------------------------------
// Dataset split

struct GroupSplit {
    std::int64_t group_id = 0;
    std::vector<std::string> train;
    std::vector<std::string> heldout;
    std::string passage_id;
};

struct DatasetSplit {
    std::vector<GroupSplit> groups;

    /// Checks ids exist with the right group, train/heldout are disjoint and
    /// group ids are unique. Empty train lists are left to pairgen.
    void validate(const TextCollection& collection) const;
    const GroupSplit* find_group(std::int64_t group_id) const;
};

// ---------------------------------------------------------------------------
// Pair records

enum class PairOrigin { kDirect, kConcatLeft, kConcatRight, kNegative };

std::string_view to_string(PairOrigin origin) noexcept;

struct PairRecord {
    std::string query_id;
    std::string passage_id;
    int hard_label = 0;
    PairOrigin origin = PairOrigin::kDirect;

    friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

/// A pair with its cached expert scores (panel order) and derived targets.
struct LabeledPair {
    PairRecord pair;
    std::vector<double> scores;
    std::optional<double> soft1;
    std::optional<double> soft2;
    std::optional<double> soft3;
};

/// The JSONL record does not carry the origin; it is recovered from the
/// label and the `<idA>+<idB>` concatenation id convention.
PairOrigin infer_origin(std::string_view query_id, std::string_view passage_id, int hard_label);

// ---------------------------------------------------------------------------
// JSON / JSONL I/O

TextCollection read_collection(std::istream& in);
void write_collection(const TextCollection& collection, std::ostream& out);
TextCollection load_collection(const std::filesystem::path& path);
void save_collection(const TextCollection& collection, const std::filesystem::path& path);

/// Split file: {"groups": [{"group_id", "train": [...], "heldout": [...], "passage_id"}]}
DatasetSplit read_split(std::istream& in);
void write_split(const DatasetSplit& split, std::ostream& out);
DatasetSplit load_split(const std::filesystem::path& path);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);

/// Writes `expert_scores` and soft fields only when populated.
void write_records(std::span<const LabeledPair> records, std::ostream& out);
std::vector<LabeledPair> read_records(std::istream& in);
void save_records(std::span<const LabeledPair> records, const std::filesystem::path& path);
std::vector<LabeledPair> load_records(const std::filesystem::path& path);

}  // namespace sdft
