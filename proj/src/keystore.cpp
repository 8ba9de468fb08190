// Copyright 2026 The tiab-screen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tiab/keystore.hpp"

#include <fcntl.h>
#include <sodium.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tiab/error.hpp"

namespace tiab::llm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error(ErrorCode::internal, "libsodium failed to initialize");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename with owner-only permissions from the first byte.
void write_private(const fs::path& p, std::string_view data) {
  const fs::path tmp = p.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) throw Error(ErrorCode::io, "cannot write " + tmp.string());
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) {
      ::close(fd);
      ::unlink(tmp.c_str());
      throw Error(ErrorCode::io, "cannot write " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (::rename(tmp.c_str(), p.c_str()) != 0) throw Error(ErrorCode::io, "cannot replace " + p.string());
}

std::string to_base64(const unsigned char* data, std::size_t len) {
  std::string out(sodium_base64_ENCODED_LEN(len, sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), data, len, sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::string from_base64(std::string_view b64) {
  std::string out(b64.size(), '\0');
  std::size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), b64.data(), b64.size(), nullptr,
                        &len, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error(ErrorCode::parse, "corrupt keystore entry");
  }
  out.resize(len);
  return out;
}

}  // namespace

fs::path default_keystore_dir() {
  if (const char* v = std::getenv(std::string(kKeystoreEnv).c_str()); v && *v) return v;
  if (const char* v = std::getenv("XDG_CONFIG_HOME"); v && *v) return fs::path(v) / "tiab-screen";
  if (const char* v = std::getenv("HOME"); v && *v) return fs::path(v) / ".config" / "tiab-screen";
  throw Error(ErrorCode::io, "cannot determine a keystore directory; set TIAB_KEYSTORE_DIR");
}

Keystore::Keystore(fs::path dir) : dir_(std::move(dir)) { ensure_sodium(); }

namespace {

struct Files {
  fs::path master;
  fs::path entries;
};

Files files_of(const fs::path& dir) { return {dir / "master.key", dir / "keys.json"}; }

std::string load_master(const fs::path& dir, bool create) {
  const Files f = files_of(dir);
  if (fs::exists(f.master)) {
    std::string k = read_file(f.master);
    if (k.size() != crypto_secretbox_KEYBYTES) throw Error(ErrorCode::parse, "keystore master key is corrupt");
    return k;
  }
  if (!create) return {};
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create keystore directory " + dir.string());
  ::chmod(dir.c_str(), 0700);
  std::string k(crypto_secretbox_KEYBYTES, '\0');
  crypto_secretbox_keygen(reinterpret_cast<unsigned char*>(k.data()));
  write_private(f.master, k);
  return k;
}

json load_entries(const fs::path& dir) {
  const Files f = files_of(dir);
  if (!fs::exists(f.entries)) return json::object();
  const json o = json::parse(read_file(f.entries), nullptr, false);
  if (o.is_discarded() || !o.is_object()) throw Error(ErrorCode::parse, "keystore index is corrupt");
  return o;
}

void check_name(std::string_view name) {
  if (name.empty()) throw Error(ErrorCode::validation, "key name is empty");
}

}  // namespace

void Keystore::set(std::string_view name, std::string_view secret) {
  check_name(name);
  if (secret.empty()) throw Error(ErrorCode::validation, "refusing to store an empty key");
  const std::string master = load_master(dir_, true);
  std::string box(crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES + secret.size(), '\0');
  auto* nonce = reinterpret_cast<unsigned char*>(box.data());
  randombytes_buf(nonce, crypto_secretbox_NONCEBYTES);
  crypto_secretbox_easy(nonce + crypto_secretbox_NONCEBYTES, reinterpret_cast<const unsigned char*>(secret.data()),
                        secret.size(), nonce, reinterpret_cast<const unsigned char*>(master.data()));
  json entries = load_entries(dir_);
  entries[std::string(name)] = to_base64(nonce, box.size());
  write_private(files_of(dir_).entries, entries.dump(2) + "\n");
}

std::optional<std::string> Keystore::get(std::string_view name) const {
  const json entries = load_entries(dir_);
  auto it = entries.find(std::string(name));
  if (it == entries.end()) return std::nullopt;
  const std::string master = load_master(dir_, false);
  if (master.empty()) throw Error(ErrorCode::parse, "keystore master key is missing");
  const std::string box = from_base64(it->get<std::string>());
  if (box.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES) {
    throw Error(ErrorCode::parse, "corrupt keystore entry");
  }
  const auto* nonce = reinterpret_cast<const unsigned char*>(box.data());
  const std::size_t ct_len = box.size() - crypto_secretbox_NONCEBYTES;
  std::string plain(ct_len - crypto_secretbox_MACBYTES, '\0');
  if (crypto_secretbox_open_easy(reinterpret_cast<unsigned char*>(plain.data()), nonce + crypto_secretbox_NONCEBYTES,
                                 ct_len, nonce, reinterpret_cast<const unsigned char*>(master.data())) != 0) {
    throw Error(ErrorCode::parse, "keystore entry failed authentication");
  }
  return plain;
}

bool Keystore::remove(std::string_view name) {
  json entries = load_entries(dir_);
  if (entries.erase(std::string(name)) == 0) return false;
  write_private(files_of(dir_).entries, entries.dump(2) + "\n");
  return true;
}

std::vector<std::string> Keystore::names() const {
  std::vector<std::string> out;
  const json entries = load_entries(dir_);
  for (const auto& [k, v] : entries.items()) out.push_back(k);
  return out;
}

}  // namespace tiab::llm
