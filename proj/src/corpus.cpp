// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/corpus.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "sdft/error.hpp"
#include "sdft/fileio.hpp"

namespace sdft {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    }
    out.write(bytes.data(), bytes.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        fail(ErrorCode::kTruncated, std::string("truncated payload while reading ") + what);
    }
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return static_cast<T>(value);
}

void put_f32(std::ostream& out, float value) { put_le(out, std::bit_cast<std::uint32_t>(value)); }

std::string read_all_lines_error(std::size_t line_no, const std::string& what) {
    return "line " + std::to_string(line_no) + ": " + what;
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrorCode::kParse, read_all_lines_error(line_no, e.what()));
        }
        if (!obj.is_object()) {
            fail(ErrorCode::kParse, read_all_lines_error(line_no, "expected a JSON object"));
        }
        try {
            fn(obj);
        } catch (const json::exception& e) {
            fail(ErrorCode::kParse, read_all_lines_error(line_no, e.what()));
        }
    }
}

bool has_concat_prefix(std::string_view query_id, std::string_view part) {
    return query_id.size() > part.size() + 1 && query_id.starts_with(part) &&
           query_id[part.size()] == '+';
}

bool has_concat_suffix(std::string_view query_id, std::string_view part) {
    return query_id.size() > part.size() + 1 && query_id.ends_with(part) &&
           query_id[query_id.size() - part.size() - 1] == '+';
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        std::size_t len = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            len = 2;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            len = 3;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > bytes.size()) {
            return false;
        }
        for (std::size_t j = 1; j < len; ++j) {
            const auto cc = static_cast<unsigned char>(bytes[i + j]);
            if ((cc & 0xc0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3f);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff) {
            return false;
        }
        i += len;
    }
    return true;
}

// ---------------------------------------------------------------------------
// TextCollection

void TextCollection::add(TextItem item) {
    if (item.group_id < 0) {
        fail(ErrorCode::kInvalidArgument, "negative group_id for text_id '" + item.text_id + "'");
    }
    if (!is_valid_utf8(item.text_id) || !is_valid_utf8(item.text)) {
        fail(ErrorCode::kParse, "invalid UTF-8 in item '" + item.text_id + "'");
    }
    if (index_.contains(item.text_id)) {
        fail(ErrorCode::kInvalidArgument, "duplicate text_id '" + item.text_id + "'");
    }
    index_.emplace(item.text_id, items_.size());
    items_.push_back(std::move(item));
}

const TextItem* TextCollection::find(std::string_view text_id) const {
    const auto it = index_.find(std::string(text_id));
    return it == index_.end() ? nullptr : &items_[it->second];
}

const TextItem& TextCollection::at(std::string_view text_id) const {
    const auto* item = find(text_id);
    if (item == nullptr) {
        fail(ErrorCode::kInvalidArgument, "unknown text_id '" + std::string(text_id) + "'");
    }
    return *item;
}

// ---------------------------------------------------------------------------
// EmbeddingMatrix

EmbeddingMatrix::EmbeddingMatrix(std::string model_id, std::size_t dim)
    : model_id_(std::move(model_id)), dim_(dim) {
    if (dim_ == 0) {
        fail(ErrorCode::kDimension, "embedding dim must be > 0");
    }
}

void EmbeddingMatrix::add_row(std::string_view text_id, std::span<const float> values) {
    if (values.size() != dim_) {
        fail(ErrorCode::kDimension, "row '" + std::string(text_id) + "' has " +
                                        std::to_string(values.size()) + " entries, expected " +
                                        std::to_string(dim_));
    }
    if (text_id.size() > 0xffff) {
        fail(ErrorCode::kInvalidArgument, "text_id longer than 65535 bytes");
    }
    for (const float v : values) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::kNonFinite, "non-finite value in row '" + std::string(text_id) + "'");
        }
    }
    std::string id(text_id);
    if (index_.contains(id)) {
        fail(ErrorCode::kInvalidArgument, "duplicate row id '" + id + "'");
    }
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::span<const float>> EmbeddingMatrix::find(std::string_view text_id) const {
    const auto it = index_.find(std::string(text_id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return row_at(it->second);
}

std::span<const float> EmbeddingMatrix::row(std::string_view text_id) const {
    auto r = find(text_id);
    if (!r) {
        fail(ErrorCode::kMissingEmbedding, "missing embedding for text_id '" +
                                               std::string(text_id) + "' in model '" + model_id_ +
                                               "'");
    }
    return *r;
}

std::span<const float> EmbeddingMatrix::row_at(std::size_t index) const {
    if (index >= ids_.size()) {
        fail(ErrorCode::kInvalidArgument, "row index out of range");
    }
    return {data_.data() + index * dim_, dim_};
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim_ == b.dim_ && a.ids_ == b.ids_ && a.data_.size() == b.data_.size() &&
           (a.data_.empty() ||
            std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0);
}

void write_matrix(const EmbeddingMatrix& matrix, std::ostream& out) {
    if (matrix.dim() > kMaxMatrixDim) {
        fail(ErrorCode::kDimension, "dimension overflow: " + std::to_string(matrix.dim()) +
                                        " exceeds 2^31-1");
    }
    out.write(kMatrixMagic, sizeof(kMatrixMagic));
    put_le<std::uint32_t>(out, kMatrixVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
    put_le<std::uint64_t>(out, matrix.rows());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        const auto& id = matrix.id_at(r);
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        for (const float v : matrix.row_at(r)) {
            put_f32(out, v);
        }
    }
    if (!out) {
        fail(ErrorCode::kIo, "I/O failure while writing matrix");
    }
}

EmbeddingMatrix read_matrix(std::istream& in, std::string model_id) {
    char magic[4];
    read_exact(in, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
        fail(ErrorCode::kBadMagic, "bad magic");
    }
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kMatrixVersion) {
        fail(ErrorCode::kVersionMismatch,
             "version mismatch: file has " + std::to_string(version) + ", expected " +
                 std::to_string(kMatrixVersion));
    }
    const auto dim = get_le<std::uint32_t>(in, "dim");
    if (dim == 0 || dim > kMaxMatrixDim) {
        fail(ErrorCode::kDimension, "invalid dim " + std::to_string(dim));
    }
    const auto row_count = get_le<std::uint64_t>(in, "row_count");

    EmbeddingMatrix matrix(std::move(model_id), dim);
    std::vector<float> values(dim);
    std::vector<unsigned char> raw(static_cast<std::size_t>(dim) * 4);
    std::string id;
    for (std::uint64_t r = 0; r < row_count; ++r) {
        const auto id_len = get_le<std::uint16_t>(in, "row id length");
        id.resize(id_len);
        read_exact(in, id.data(), id_len, "row id");
        if (!is_valid_utf8(id)) {
            fail(ErrorCode::kParse, "row " + std::to_string(r) + " id is not valid UTF-8");
        }
        read_exact(in, reinterpret_cast<char*>(raw.data()), raw.size(), "row payload");
        for (std::size_t j = 0; j < dim; ++j) {
            const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * j]) |
                                       (static_cast<std::uint32_t>(raw[4 * j + 1]) << 8) |
                                       (static_cast<std::uint32_t>(raw[4 * j + 2]) << 16) |
                                       (static_cast<std::uint32_t>(raw[4 * j + 3]) << 24);
            values[j] = std::bit_cast<float>(bits);
            if (!std::isfinite(values[j])) {
                fail(ErrorCode::kNonFinite, "non-finite value in row '" + id + "'");
            }
        }
        matrix.add_row(id, values);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        fail(ErrorCode::kParse, "trailing bytes after last row");
    }
    return matrix;
}

void save_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
    write_file(path, [&](std::ostream& out) { write_matrix(matrix, out); }, true);
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path, std::string model_id) {
    auto in = open_input(path, true);
    if (model_id.empty()) {
        model_id = path.stem().string();
    }
    try {
        return read_matrix(in, std::move(model_id));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        fail(ErrorCode::kDimension, "cosine of vectors with different lengths");
    }
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if (uu == 0.0 || vv == 0.0) {
        fail(ErrorCode::kDegenerateVector, "degenerate vector");
    }
    return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// DatasetSplit

const GroupSplit* DatasetSplit::find_group(std::int64_t group_id) const {
    for (const auto& g : groups) {
        if (g.group_id == group_id) {
            return &g;
        }
    }
    return nullptr;
}

void DatasetSplit::validate(const TextCollection& collection) const {
    std::unordered_set<std::int64_t> seen_groups;
    std::unordered_set<std::string> seen_ids;
    for (const auto& g : groups) {
        if (!seen_groups.insert(g.group_id).second) {
            fail(ErrorCode::kInvalidArgument, "split lists group " + std::to_string(g.group_id) +
                                                  " twice");
        }
        auto check = [&](const std::string& id, const char* role) {
            const auto& item = collection.at(id);
            if (item.group_id != g.group_id) {
                fail(ErrorCode::kInvalidArgument,
                     std::string(role) + " '" + id + "' belongs to group " +
                         std::to_string(item.group_id) + ", split says " +
                         std::to_string(g.group_id));
            }
        };
        for (const auto& id : g.train) {
            check(id, "train question");
            if (!seen_ids.insert(id).second) {
                fail(ErrorCode::kInvalidArgument, "question '" + id + "' listed twice in split");
            }
        }
        for (const auto& id : g.heldout) {
            check(id, "held-out question");
            if (!seen_ids.insert(id).second) {
                fail(ErrorCode::kInvalidArgument,
                     "question '" + id + "' is both train and held-out (or repeated)");
            }
        }
        if (!g.passage_id.empty()) {
            check(g.passage_id, "passage");
        }
    }
}

// ---------------------------------------------------------------------------
// Pair records

std::string_view to_string(PairOrigin origin) noexcept {
    switch (origin) {
        case PairOrigin::kDirect:
            return "direct";
        case PairOrigin::kConcatLeft:
            return "concat_left";
        case PairOrigin::kConcatRight:
            return "concat_right";
        case PairOrigin::kNegative:
            return "negative";
    }
    return "unknown";
}

PairOrigin infer_origin(std::string_view query_id, std::string_view passage_id, int hard_label) {
    if (hard_label == 0) {
        return PairOrigin::kNegative;
    }
    if (has_concat_prefix(query_id, passage_id)) {
        return PairOrigin::kConcatLeft;
    }
    if (has_concat_suffix(query_id, passage_id)) {
        return PairOrigin::kConcatRight;
    }
    return PairOrigin::kDirect;
}

// ---------------------------------------------------------------------------
// JSON I/O

TextCollection read_collection(std::istream& in) {
    TextCollection collection;
    for_each_json_line(in, [&](const json& obj) {
        TextItem item;
        item.text_id = obj.at("text_id").get<std::string>();
        item.text = obj.at("text").get<std::string>();
        item.group_id = obj.at("group_id").get<std::int64_t>();
        collection.add(std::move(item));
    });
    return collection;
}

void write_collection(const TextCollection& collection, std::ostream& out) {
    for (const auto& item : collection.items()) {
        ordered_json obj;
        obj["text_id"] = item.text_id;
        obj["text"] = item.text;
        obj["group_id"] = item.group_id;
        out << obj.dump() << '\n';
    }
}

TextCollection load_collection(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_collection(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_collection(const TextCollection& collection, const std::filesystem::path& path) {
    write_file(path, [&](std::ostream& out) { write_collection(collection, out); });
}

DatasetSplit read_split(std::istream& in) {
    DatasetSplit split;
    try {
        const json doc = json::parse(in);
        for (const auto& g : doc.at("groups")) {
            GroupSplit gs;
            gs.group_id = g.at("group_id").get<std::int64_t>();
            gs.train = g.at("train").get<std::vector<std::string>>();
            gs.heldout = g.value("heldout", std::vector<std::string>{});
            gs.passage_id = g.value("passage_id", std::string{});
            split.groups.push_back(std::move(gs));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::kParse, std::string("split: ") + e.what());
    }
    return split;
}

void write_split(const DatasetSplit& split, std::ostream& out) {
    ordered_json groups = ordered_json::array();
    for (const auto& g : split.groups) {
        ordered_json obj;
        obj["group_id"] = g.group_id;
        obj["train"] = g.train;
        obj["heldout"] = g.heldout;
        obj["passage_id"] = g.passage_id;
        groups.push_back(std::move(obj));
    }
    ordered_json doc;
    doc["groups"] = std::move(groups);
    out << doc.dump(1) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_split(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
    write_file(path, [&](std::ostream& out) { write_split(split, out); });
}

void write_records(std::span<const LabeledPair> records, std::ostream& out) {
    for (const auto& r : records) {
        ordered_json obj;
        obj["query_id"] = r.pair.query_id;
        obj["passage_id"] = r.pair.passage_id;
        obj["hard_label"] = r.pair.hard_label;
        if (!r.scores.empty()) {
            obj["expert_scores"] = r.scores;
        }
        if (r.soft1) obj["soft1"] = *r.soft1;
        if (r.soft2) obj["soft2"] = *r.soft2;
        if (r.soft3) obj["soft3"] = *r.soft3;
        out << obj.dump() << '\n';
    }
}

std::vector<LabeledPair> read_records(std::istream& in) {
    std::vector<LabeledPair> records;
    for_each_json_line(in, [&](const json& obj) {
        LabeledPair r;
        r.pair.query_id = obj.at("query_id").get<std::string>();
        r.pair.passage_id = obj.at("passage_id").get<std::string>();
        r.pair.hard_label = obj.at("hard_label").get<int>();
        if (r.pair.hard_label != 0 && r.pair.hard_label != 1) {
            fail(ErrorCode::kParse, "hard_label must be 0 or 1");
        }
        r.pair.origin = infer_origin(r.pair.query_id, r.pair.passage_id, r.pair.hard_label);
        if (obj.contains("expert_scores")) {
            r.scores = obj.at("expert_scores").get<std::vector<double>>();
        }
        auto opt = [&](const char* key, std::optional<double>& dst) {
            if (obj.contains(key) && !obj.at(key).is_null()) {
                dst = obj.at(key).get<double>();
            }
        };
        opt("soft1", r.soft1);
        opt("soft2", r.soft2);
        opt("soft3", r.soft3);
        records.push_back(std::move(r));
    });
    return records;
}

void save_records(std::span<const LabeledPair> records, const std::filesystem::path& path) {
    write_file(path, [&](std::ostream& out) { write_records(records, out); });
}

std::vector<LabeledPair> load_records(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_records(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

}  // namespace sdft
