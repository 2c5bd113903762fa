#pragma once

// Test packets and the on-disk corpus format: one raw file per packet plus
// a manifest.json listing them.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tdforge/ast.hpp"
#include "tdforge/program.hpp"

namespace tdforge {

enum class Label { kPositive, kNegative };

std::string_view to_string(Label label);
std::optional<Label> label_from_string(std::string_view s);

struct TestPacket {
  std::string id;   // first 16 hex digits of SHA-256(bytes)
  Bytes bytes;
  Label label = Label::kPositive;
  BranchTrace trace;        // replay trace
  std::string query_kind;   // provenance, e.g. "positive" or "negative:truncated"
  std::string note;         // free text recorded in the manifest when non-empty

  static TestPacket make(Bytes bytes, Label label, BranchTrace trace, std::string query_kind);
};

std::string packet_id(std::span<const std::uint8_t> bytes);

/// Keeps the first packet for each distinct byte sequence, preserving order.
std::vector<TestPacket> dedupe(std::vector<TestPacket> corpus);

/// Positives first, otherwise original order.
std::vector<TestPacket> stable_sorted(std::vector<TestPacket> corpus);

/// `<label>-<8 hex>.bin`; `wide` uses all 16 hex digits of the id.
std::string packet_file_name(const TestPacket& p, bool wide = false);

/// Manifest records in the given order. `spec_sha256` may be empty.
std::string manifest_json(const std::vector<TestPacket>& corpus, const std::string& spec_sha256);

/// Parses a manifest. Throws std::runtime_error on malformed input or when a
/// record's hex disagrees with its id.
std::vector<TestPacket> parse_manifest(const std::string& json_text);

/// Writes `<dir>/<file>.bin` for each packet and `<dir>/manifest.json`.
/// Packets are stable-sorted first. Returns the written manifest order.
std::vector<TestPacket> write_corpus(const std::filesystem::path& dir, std::vector<TestPacket> corpus,
                                     const std::string& spec_sha256);

std::vector<TestPacket> read_manifest(const std::filesystem::path& manifest_path);

Bytes read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tdforge
