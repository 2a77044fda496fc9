#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "driftwatch/document.hpp"
#include "driftwatch/error.hpp"

namespace driftwatch {

// Corpus files are UTF-8, one record per line: a flat JSON object with
// required string fields "id", "ts" (ISO-8601), "title", "body".
// Unknown fields are ignored.

inline Document parse_corpus_line(const std::string& line, std::size_t line_no) {
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError("line " + std::to_string(line_no) + ": not a valid record (" +
                          e.what() + ")");
    }
    if (!rec.is_object()) {
        throw CorpusError("line " + std::to_string(line_no) + ": record is not an object");
    }
    for (const char* key : {"id", "ts", "title", "body"}) {
        if (!rec.contains(key) || !rec[key].is_string()) {
            throw CorpusError("line " + std::to_string(line_no) + ": missing string field \"" +
                              key + "\"");
        }
    }
    const std::string id = rec["id"].get<std::string>();
    if (id.empty()) {
        throw CorpusError("line " + std::to_string(line_no) + ": empty \"id\"");
    }
    const auto ts = parse_instant(rec["ts"].get<std::string>());
    if (!ts) {
        throw CorpusError("line " + std::to_string(line_no) + ": unparsable \"ts\" value \"" +
                          rec["ts"].get<std::string>() + "\"");
    }
    return make_document(id, *ts, rec["title"].get<std::string>(),
                         rec["body"].get<std::string>());
}

// Reads every record of a line-delimited corpus, preserving file order.
// Blank lines are not allowed. Duplicate ids report both line numbers.
inline std::vector<Document> ingest_stream(std::istream& in) {
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;  // id -> line number
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        Document d = parse_corpus_line(line, line_no);
        auto [it, inserted] = seen.emplace(d.id, line_no);
        if (!inserted) {
            throw CorpusError("line " + std::to_string(line_no) + ": duplicate id \"" + d.id +
                              "\" (first seen at line " + std::to_string(it->second) + ")");
        }
        docs.push_back(std::move(d));
    }
    return docs;
}

inline std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open corpus file: " + path);
    try {
        return ingest_stream(in);
    } catch (const CorpusError& e) {
        throw CorpusError(path + ": " + e.what());
    }
}

inline std::string serialize_document(const Document& d) {
    nlohmann::json rec;
    rec["id"] = d.id;
    rec["ts"] = format_instant(d.ts);
    rec["title"] = d.title;
    rec["body"] = d.body;
    return rec.dump();
}

inline std::string serialize_corpus(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        out += serialize_document(d);
        out += '\n';
    }
    return out;
}

// Writes content to a temporary file next to `path` and renames it into
// place, so a failed run never leaves a partial output file behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open output file for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot move output into place: " + path);
    }
}

}  // namespace driftwatch
