#pragma once

// Append-only document persistence behind a narrow interface.

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hemvip/model.hpp"

namespace hemvip {

class DocumentStore {
 public:
  virtual ~DocumentStore() = default;

  /// Appends one document to a named collection. Implementations never
  /// rewrite or remove earlier documents.
  virtual void append(std::string_view collection, const Json& doc) = 0;

  /// Documents of a collection in append order.
  virtual std::vector<Json> read_all(std::string_view collection) const = 0;
};

class MemoryStore final : public DocumentStore {
 public:
  void append(std::string_view collection, const Json& doc) override;
  std::vector<Json> read_all(std::string_view collection) const override;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<Json>, std::less<>> collections_;
};

/// One "<collection>.jsonl" file per collection under `dir`; each append
/// writes a single line and flushes it.
class JsonLinesStore final : public DocumentStore {
 public:
  explicit JsonLinesStore(std::filesystem::path dir);

  void append(std::string_view collection, const Json& doc) override;
  std::vector<Json> read_all(std::string_view collection) const override;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path file_for(std::string_view collection) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace hemvip
