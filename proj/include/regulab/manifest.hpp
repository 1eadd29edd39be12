#pragma once

#include <openssl/evp.h>

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "regulab/common.hpp"

namespace regulab {

/// SHA-256 of a byte string, lowercase hex.
inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx != nullptr && EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  (data.empty() || EVP_DigestUpdate(ctx, data.data(), data.size()) == 1) &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha256_hex: digest failure");
  static constexpr char hexd[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hexd[md[i] >> 4];
    out[2 * i + 1] = hexd[md[i] & 0xf];
  }
  return out;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Run manifest: checksums of every produced file plus the inputs and seeds
/// that generated them.  Keys are emitted in sorted order and no timestamps
/// or host details are recorded, so identical runs render identical bytes.
class Manifest {
 public:
  void add_output(const std::string& name, std::string_view content) {
    files_[name] = {{"bytes", content.size()}, {"sha256", sha256_hex(content)}};
  }
  void add_input(const std::string& label, const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    inputs_[label] = {{"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}};
  }
  void add_meta(const std::string& key, const nlohmann::json& value) { meta_[key] = value; }

  std::string render() const {
    nlohmann::json doc;
    doc["files"] = files_;
    doc["inputs"] = inputs_;
    for (const auto& [k, v] : meta_.items()) doc[k] = v;
    doc["tool"] = {{"name", "regulab"}, {"version", version_string}};
    return doc.dump(2) + "\n";
  }

 private:
  nlohmann::json files_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json meta_ = nlohmann::json::object();
};

}  // namespace regulab
