#include "hemvip/store.hpp"

#include <fstream>
#include <stdexcept>

namespace hemvip {

void MemoryStore::append(std::string_view collection, const Json& doc) {
  std::lock_guard lock(mutex_);
  auto it = collections_.find(collection);
  if (it == collections_.end()) it = collections_.emplace(std::string(collection), std::vector<Json>{}).first;
  it->second.push_back(doc);
}

std::vector<Json> MemoryStore::read_all(std::string_view collection) const {
  std::lock_guard lock(mutex_);
  const auto it = collections_.find(collection);
  return it == collections_.end() ? std::vector<Json>{} : it->second;
}

JsonLinesStore::JsonLinesStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path JsonLinesStore::file_for(std::string_view collection) const {
  for (const char c : collection) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) throw std::invalid_argument("invalid collection name '" + std::string(collection) + "'");
  }
  return dir_ / (std::string(collection) + ".jsonl");
}

void JsonLinesStore::append(std::string_view collection, const Json& doc) {
  const auto path = file_for(collection);
  std::lock_guard lock(mutex_);
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for append");
  out << doc.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<Json> JsonLinesStore::read_all(std::string_view collection) const {
  const auto path = file_for(collection);
  std::lock_guard lock(mutex_);
  std::vector<Json> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      // A torn final line from a crash mid-append is skipped; anything else is corruption.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hemvip
