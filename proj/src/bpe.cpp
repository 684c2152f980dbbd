#include "forge/bpe.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/util.hpp"

namespace forge {

std::vector<std::string> utf8_symbols(std::string_view word) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < word.size()) {
        unsigned char b = static_cast<unsigned char>(word[i]);
        std::size_t len = 1;
        if (b >= 0xf0) len = 4;
        else if (b >= 0xe0) len = 3;
        else if (b >= 0xc0) len = 2;
        if (i + len > word.size()) len = 1;
        // continuation bytes must all carry the 10xxxxxx marker
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(word[i + k]) & 0xc0) != 0x80) {
                len = 1;
                break;
            }
        }
        out.emplace_back(word.substr(i, len));
        i += len;
    }
    return out;
}

namespace {

std::string merge_key(std::string_view left, std::string_view right) {
    std::string k(left);
    k.push_back('\n');
    k.append(right);
    return k;
}

std::string byte_token(unsigned char b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "<0x%02X>", b);
    return buf;
}

}  // namespace

BpeTokenizer BpeTokenizer::load(const std::string& vocab_json, const std::string& merges_text) {
    BpeTokenizer tok;

    nlohmann::json j = nlohmann::json::parse(vocab_json, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("vocab file is not a JSON object");
    for (auto& [token, id_val] : j.items()) {
        if (!id_val.is_number_integer() || id_val.get<std::int64_t>() < 0)
            throw FormatError("vocab id for '" + token + "' is not a non-negative integer");
        if (!tok.id_of_.emplace(token, id_val.get<std::int64_t>()).second)
            throw FormatError("duplicate vocab token: " + token);
    }
    if (tok.id_of_.empty()) throw FormatError("vocab is empty");

    tok.token_of_.assign(tok.id_of_.size(), std::string());
    std::vector<char> seen(tok.id_of_.size(), 0);
    for (auto& [token, id] : tok.id_of_) {
        if (id >= static_cast<std::int64_t>(tok.id_of_.size()) || seen[id])
            throw FormatError("vocab ids must be unique and dense from 0");
        seen[id] = 1;
        tok.token_of_[id] = token;
    }

    int rank = 0;
    for (std::string_view line : util::split(merges_text, '\n')) {
        std::string_view trimmed = util::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto parts = util::split_whitespace(trimmed);
        if (parts.size() != 2)
            throw FormatError("merge line must have two fields: " + std::string(trimmed));
        std::string left(parts[0]), right(parts[1]);
        if (!tok.id_of_.count(left) || !tok.id_of_.count(right) ||
            !tok.id_of_.count(left + right))
            throw FormatError("merge references tokens missing from the vocab: " +
                              std::string(trimmed));
        if (!tok.rank_.emplace(merge_key(left, right), rank).second)
            throw FormatError("duplicate merge rule: " + std::string(trimmed));
        tok.merges_.emplace_back(std::move(left), std::move(right));
        ++rank;
    }

    tok.byte_fallback_ = true;
    for (int b = 0; b < 256 && tok.byte_fallback_; ++b)
        if (!tok.id_of_.count(byte_token(static_cast<unsigned char>(b))))
            tok.byte_fallback_ = false;
    if (auto it = tok.id_of_.find(kEosToken); it != tok.id_of_.end()) tok.eos_id_ = it->second;
    if (auto it = tok.id_of_.find(kUnkToken); it != tok.id_of_.end()) tok.unk_id_ = it->second;
    return tok;
}

std::string BpeTokenizer::vocab_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::int64_t id = 0; id < static_cast<std::int64_t>(token_of_.size()); ++id)
        j[token_of_[id]] = id;
    return j.dump(2) + "\n";
}

std::string BpeTokenizer::merges_text() const {
    std::string out;
    for (auto& [left, right] : merges_) {
        out += left;
        out += ' ';
        out += right;
        out += '\n';
    }
    return out;
}

std::vector<std::string> BpeTokenizer::merge_word(std::string_view word) const {
    std::vector<std::string> syms = utf8_symbols(word);
    while (syms.size() > 1) {
        int best_rank = -1;
        std::size_t best_pos = 0;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            auto it = rank_.find(merge_key(syms[i], syms[i + 1]));
            if (it != rank_.end() && (best_rank < 0 || it->second < best_rank)) {
                best_rank = it->second;
                best_pos = i;
            }
        }
        if (best_rank < 0) break;
        syms[best_pos] += syms[best_pos + 1];
        syms.erase(syms.begin() + best_pos + 1);
    }
    return syms;
}

std::vector<std::int64_t> BpeTokenizer::encode(std::string_view text) const {
    std::vector<std::int64_t> ids;
    for (std::string_view word : util::split_whitespace(text)) {
        for (std::string& sym : merge_word(word)) {
            if (auto it = id_of_.find(sym); it != id_of_.end()) {
                ids.push_back(it->second);
            } else if (byte_fallback_) {
                for (char c : sym)
                    ids.push_back(id_of_.at(byte_token(static_cast<unsigned char>(c))));
            } else if (unk_id_) {
                ids.push_back(*unk_id_);
            } else {
                throw DataError("symbol '" + sym +
                                "' not in vocab and no fallback is available");
            }
        }
    }
    return ids;
}

std::uint64_t BpeTokenizer::token_count(std::string_view text) const {
    return encode(text).size();
}

CorpusTokenStats encode_corpus_serial(const BpeTokenizer& tok, std::span<const Document> docs) {
    if (!tok.eos_id())
        throw ConfigError("corpus encoding needs the end-of-text token in the vocab");
    CorpusTokenStats s;
    s.documents = docs.size();
    for (auto& d : docs) {
        s.words += util::split_whitespace(d.text).size();
        s.tokens += tok.token_count(d.text) + 1;
    }
    return s;
}

CorpusTokenStats encode_corpus(const BpeTokenizer& tok, std::span<const Document> docs,
                               int threads) {
    if (threads <= 1) return encode_corpus_serial(tok, docs);
    if (!tok.eos_id())
        throw ConfigError("corpus encoding needs the end-of-text token in the vocab");
    CorpusTokenStats s;
    s.documents = docs.size();
    std::uint64_t words = 0, tokens = 0;
    std::int64_t n = static_cast<std::int64_t>(docs.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64) \
    reduction(+ : words, tokens)
    for (std::int64_t i = 0; i < n; ++i) {
        words += util::split_whitespace(docs[i].text).size();
        tokens += tok.token_count(docs[i].text) + 1;
    }
    s.words = words;
    s.tokens = tokens;
    return s;
}

CompressionReport make_compression_report(std::vector<CompressionRow> rows) {
    for (auto& r : rows) {
        if (!r.ok) continue;
        if (r.words == 0) {
            r.ok = false;
            r.error = "no words in sample";
            continue;
        }
        r.tokens_per_word = static_cast<double>(r.tokens) / static_cast<double>(r.words);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CompressionRow& a,
                                                  const CompressionRow& b) {
        if (a.ok != b.ok) return a.ok;  // failures sink to the bottom
        if (!a.ok) return a.name < b.name;
        if (a.tokens_per_word != b.tokens_per_word) return a.tokens_per_word < b.tokens_per_word;
        return a.vocab_size < b.vocab_size;
    });
    return CompressionReport{std::move(rows)};
}

nlohmann::json CompressionReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : rows) {
        nlohmann::json j{{"name", r.name}, {"vocab_size", r.vocab_size}, {"ok", r.ok}};
        if (r.ok) {
            j["tokens"] = r.tokens;
            j["words"] = r.words;
            j["tokens_per_word"] = r.tokens_per_word;
        } else {
            j["error"] = r.error;
        }
        arr.push_back(std::move(j));
    }
    return nlohmann::json{{"kind", "compression"}, {"rows", arr}};
}

std::string CompressionReport::table() const {
    util::TextTable t({"Tokenizer", "Vocab", "Tokens", "Words", "Tokens/word"});
    for (auto& r : rows) {
        if (r.ok)
            t.add_row({r.name, util::format_with_commas(r.vocab_size), util::format_with_commas(r.tokens),
                       util::format_with_commas(r.words), util::format_double(r.tokens_per_word, 4)});
        else
            t.add_row({r.name, util::format_with_commas(r.vocab_size), "-", "-",
                       "failed: " + r.error});
    }
    return t.str();
}

std::string CompressionReport::csv() const {
    std::string out = "name,vocab_size,tokens,words,tokens_per_word,ok,error\n";
    for (auto& r : rows) {
        out += util::csv_escape(r.name) + ',' + std::to_string(r.vocab_size) + ',' +
               std::to_string(r.tokens) + ',' + std::to_string(r.words) + ',' +
               (r.ok ? util::format_double(r.tokens_per_word, 6) : std::string()) + ',' +
               (r.ok ? "1" : "0") + ',' + util::csv_escape(r.error) + '\n';
    }
    return out;
}

}  // namespace forge
