#include "forge/document.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

using nlohmann::json;

const char* to_string(QualityLabel l) {
    return l == QualityLabel::high ? "high" : "low";
}

QualityLabel quality_label_from_string(const std::string& s) {
    if (s == "high") return QualityLabel::high;
    if (s == "low") return QualityLabel::low;
    throw FormatError("unknown quality label: " + s);
}

JsonlReader::JsonlReader(std::istream& in, IngestOptions opts) : in_(in), opts_(std::move(opts)) {
    next_seq_ = opts_.first_sequence_no;
    if (!in_.good() && !in_.eof()) throw IoError("unreadable input stream");
}

std::optional<Document> JsonlReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++stats_.lines_read;
        if (util::trim(line).empty()) {
            --stats_.lines_read;  // blank lines are not records
            continue;
        }
        if (line.size() > opts_.max_record_bytes) {
            ++stats_.skipped;
            continue;
        }
        try {
            Document doc = parse_record(line, opts_, next_seq_);
            ++next_seq_;
            ++stats_.yielded;
            return doc;
        } catch (const FormatError&) {
            ++stats_.skipped;
        }
    }
    if (in_.bad()) throw IoError("I/O failure while reading records");
    return std::nullopt;
}

Document parse_record(const std::string& line, const IngestOptions& opts, std::uint64_t sequence_no) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FormatError("record is not a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) throw FormatError("record has no text field");

    Document doc;
    doc.text = j["text"].get<std::string>();
    doc.sequence_no = sequence_no;

    if (j.contains("subset")) {
        if (!j["subset"].is_string() || j["subset"].get<std::string>().empty())
            throw FormatError("subset must be a non-empty string");
        doc.subset = j["subset"].get<std::string>();
    } else {
        doc.subset = opts.default_subset;
    }

    bool has_label = j.contains("label");
    bool has_conf = j.contains("confidence");
    if (has_label != has_conf) throw FormatError("label and confidence must appear together");
    if (has_label) {
        if (!j["label"].is_string()) throw FormatError("label must be a string");
        doc.quality_label = quality_label_from_string(j["label"].get<std::string>());
        if (!j["confidence"].is_number()) throw FormatError("confidence must be a number");
        double c = j["confidence"].get<double>();
        if (!(c >= 0.0 && c <= 1.0)) throw FormatError("confidence outside [0,1]");
        doc.quality_confidence = c;
    }

    if (j.contains("id")) {
        if (!j["id"].is_string()) throw FormatError("id must be a string");
        doc.id = j["id"].get<std::string>();
    } else {
        doc.id = doc.subset + "-" + std::to_string(sequence_no);
    }

    for (auto& [key, value] : j.items()) {
        if (key == "text" || key == "subset" || key == "label" || key == "confidence" || key == "id")
            continue;
        doc.extra[key] = value;
    }
    return doc;
}

std::string to_jsonl_line(const Document& doc) {
    json j = json::object();
    j["id"] = doc.id;
    j["subset"] = doc.subset;
    j["text"] = doc.text;
    if (doc.quality_label) {
        j["label"] = to_string(*doc.quality_label);
        j["confidence"] = *doc.quality_confidence;
    }
    for (auto& [key, value] : doc.extra.items()) j[key] = value;
    return j.dump();
}

std::vector<Document> read_jsonl(std::istream& in, IngestOptions opts, IngestStats* stats) {
    JsonlReader reader(in, std::move(opts));
    std::vector<Document> docs;
    while (auto doc = reader.next()) docs.push_back(std::move(*doc));
    if (stats) *stats = reader.stats();
    return docs;
}

void write_jsonl(std::ostream& out, const std::vector<Document>& docs) {
    for (const auto& doc : docs) out << to_jsonl_line(doc) << '\n';
    if (!out) throw IoError("I/O failure while writing records");
}

void ManifestBuilder::add(const Document& doc) {
    tallies_[doc.subset].docs += 1;
}

void ManifestBuilder::add_counts(const std::string& subset, std::uint64_t docs,
                                 std::optional<std::uint64_t> tokens) {
    Tally& t = tallies_[subset];
    t.docs += docs;
    if (tokens) {
        t.tokens += *tokens;
        t.has_tokens = true;
    }
}

void ManifestBuilder::merge(const ManifestBuilder& other) {
    for (const auto& [subset, tally] : other.tallies_) {
        Tally& t = tallies_[subset];
        t.docs += tally.docs;
        t.tokens += tally.tokens;
        t.has_tokens = t.has_tokens || tally.has_tokens;
    }
}

CorpusManifest ManifestBuilder::build() const {
    CorpusManifest m;
    bool all_tokens = !tallies_.empty();
    std::uint64_t token_sum = 0;
    for (const auto& [subset, tally] : tallies_) {
        SubsetStats s;
        s.subset = subset;
        s.doc_count = tally.docs;
        if (tally.has_tokens) {
            s.token_count = tally.tokens;
            token_sum += tally.tokens;
        } else {
            all_tokens = false;
        }
        m.total_docs += tally.docs;
        m.subsets.push_back(std::move(s));
    }
    for (auto& s : m.subsets)
        s.share = m.total_docs ? static_cast<double>(s.doc_count) / static_cast<double>(m.total_docs) : 0.0;
    std::sort(m.subsets.begin(), m.subsets.end(), [](const SubsetStats& a, const SubsetStats& b) {
        if (a.doc_count != b.doc_count) return a.doc_count > b.doc_count;
        return a.subset < b.subset;
    });
    if (all_tokens) m.total_tokens = token_sum;
    return m;
}

CorpusManifest build_manifest(const std::vector<Document>& docs) {
    ManifestBuilder b;
    for (const auto& doc : docs) b.add(doc);
    return b.build();
}

json manifest_to_json(const CorpusManifest& m) {
    json subsets = json::array();
    for (const auto& s : m.subsets) {
        json row;
        row["subset"] = s.subset;
        row["doc_count"] = s.doc_count;
        row["share"] = s.share;
        if (s.token_count) row["token_count"] = *s.token_count;
        subsets.push_back(row);
    }
    json j;
    j["kind"] = "manifest";
    j["subsets"] = subsets;
    j["total_docs"] = m.total_docs;
    if (m.total_tokens) j["total_tokens"] = *m.total_tokens;
    return j;
}

std::string manifest_table(const CorpusManifest& m) {
    bool tokens = m.total_tokens.has_value();
    std::vector<std::string> headers = {"Subset", "Docs", "Share"};
    if (tokens) headers.push_back("Tokens");
    util::TextTable t(headers);
    for (const auto& s : m.subsets) {
        std::vector<std::string> row = {s.subset, util::format_with_commas(s.doc_count),
                                        util::format_double(100.0 * s.share, 2) + "%"};
        if (tokens) row.push_back(util::format_with_commas(s.token_count.value_or(0)));
        t.add_row(std::move(row));
    }
    std::vector<std::string> total = {"Total", util::format_with_commas(m.total_docs), "100.00%"};
    if (tokens) total.push_back(util::format_with_commas(*m.total_tokens));
    t.add_row(std::move(total));
    return t.str();
}

}  // namespace forge
