#include "tdforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tdforge/hash.hpp"

namespace tdforge {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Label label) { return label == Label::kPositive ? "positive" : "negative"; }

std::optional<Label> label_from_string(std::string_view s) {
  if (s == "positive") return Label::kPositive;
  if (s == "negative") return Label::kNegative;
  return std::nullopt;
}

std::string packet_id(std::span<const std::uint8_t> bytes) { return sha256_hex(bytes).substr(0, 16); }

TestPacket TestPacket::make(Bytes bytes, Label label, BranchTrace trace, std::string query_kind) {
  TestPacket p;
  p.id = packet_id(bytes);
  p.bytes = std::move(bytes);
  p.label = label;
  p.trace = std::move(trace);
  p.query_kind = std::move(query_kind);
  return p;
}

std::vector<TestPacket> dedupe(std::vector<TestPacket> corpus) {
  std::set<Bytes> seen;
  std::vector<TestPacket> out;
  for (auto& p : corpus) {
    if (seen.insert(p.bytes).second) out.push_back(std::move(p));
  }
  return out;
}

std::vector<TestPacket> stable_sorted(std::vector<TestPacket> corpus) {
  std::stable_sort(corpus.begin(), corpus.end(), [](const TestPacket& a, const TestPacket& b) {
    return a.label == Label::kPositive && b.label == Label::kNegative;
  });
  return corpus;
}

std::string packet_file_name(const TestPacket& p, bool wide) {
  return std::string(to_string(p.label)) + "-" + (wide ? p.id : p.id.substr(0, 8)) + ".bin";
}

namespace {

// Short names may collide across distinct packets; fall back to the full id then.
std::vector<std::string> file_names(const std::vector<TestPacket>& corpus) {
  std::map<std::string, int> count;
  for (const auto& p : corpus) ++count[packet_file_name(p)];
  std::vector<std::string> out;
  for (const auto& p : corpus) out.push_back(packet_file_name(p, count[packet_file_name(p)] > 1));
  return out;
}

}  // namespace

std::string manifest_json(const std::vector<TestPacket>& corpus, const std::string& spec_sha256) {
  auto names = file_names(corpus);
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const TestPacket& p = corpus[i];
    ordered_json rec;
    rec["id"] = p.id;
    rec["file"] = names[i];
    rec["label"] = to_string(p.label);
    rec["hex"] = to_hex(p.bytes);
    rec["trace"] = p.trace;
    rec["query_kind"] = p.query_kind;
    rec["spec_sha256"] = spec_sha256;
    if (!p.note.empty()) rec["note"] = p.note;
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::vector<TestPacket> parse_manifest(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("manifest must be a JSON array");
  std::vector<TestPacket> out;
  for (const auto& rec : doc) {
    try {
      auto label = label_from_string(rec.at("label").get<std::string>());
      if (!label) throw std::runtime_error("bad label in manifest record");
      TestPacket p = TestPacket::make(from_hex(rec.at("hex").get<std::string>()), *label,
                                      rec.value("trace", BranchTrace{}), rec.value("query_kind", std::string{}));
      if (rec.contains("id") && rec["id"].get<std::string>() != p.id) {
        throw std::runtime_error("manifest id " + rec["id"].get<std::string>() + " does not match its bytes");
      }
      p.note = rec.value("note", std::string{});
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("malformed manifest record: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("malformed manifest hex: ") + e.what());
    }
  }
  return out;
}

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::vector<TestPacket> write_corpus(const std::filesystem::path& dir, std::vector<TestPacket> corpus,
                                     const std::string& spec_sha256) {
  corpus = stable_sorted(std::move(corpus));
  std::filesystem::create_directories(dir);
  auto names = file_names(corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::ofstream out(dir / names[i], std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(corpus[i].bytes.data()),
              static_cast<std::streamsize>(corpus[i].bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + (dir / names[i]).string());
  }
  write_text_file(dir / "manifest.json", manifest_json(corpus, spec_sha256));
  return corpus;
}

std::vector<TestPacket> read_manifest(const std::filesystem::path& manifest_path) {
  return parse_manifest(read_text_file(manifest_path));
}

}  // namespace tdforge
