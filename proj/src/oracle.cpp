#include "rigid/oracle.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rigid/canonical.hpp"
#include "rigid/parallel.hpp"

namespace rigid {

std::string protocol_name(OracleInvariant inv) {
  switch (inv) {
    case OracleInvariant::Plane:
      return "PLANE";
    case OracleInvariant::Sphere:
      return "SPHERE";
    case OracleInvariant::MBezout:
      return "MBEZOUT";
  }
  return "?";
}

std::optional<OracleInvariant> parse_invariant(const std::string& text) {
  std::string upper;
  for (char c : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper == "PLANE") return OracleInvariant::Plane;
  if (upper == "SPHERE") return OracleInvariant::Sphere;
  if (upper == "MBEZOUT") return OracleInvariant::MBezout;
  return std::nullopt;
}

std::string format_request(OracleInvariant inv, const Graph& g) {
  return protocol_name(inv) + " " + std::to_string(g.order()) + " " +
         to_string(canonical_code(g).value()) + "\n";
}

std::uint64_t parse_reply(const std::string& raw) {
  std::string line = raw;
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line.rfind("ERR", 0) == 0 && (line.size() == 3 || line[3] == ' ')) {
    throw OracleReplyError(line.size() > 4 ? line.substr(4) : std::string());
  }
  if (line.rfind("OK ", 0) == 0) {
    const char* first = line.data() + 3;
    const char* last = line.data() + line.size();
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc() && ptr == last && first != last) return value;
  }
  throw OracleProtocolError("malformed oracle reply: '" + line + "'");
}

OracleClient::OracleClient(const std::string& command) : command_(command) {
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];
  int from_child[2];
  if (pipe2(to_child, O_CLOEXEC) != 0) {
    throw OracleTransportError("cannot create pipe: " + std::string(std::strerror(errno)));
  }
  if (pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw OracleTransportError("cannot create pipe: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw OracleTransportError("cannot fork oracle: " + std::string(std::strerror(errno)));
  }
  if (pid_ == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  to_child_ = fdopen(to_child[1], "w");
  from_child_ = fdopen(from_child[0], "r");
}

OracleClient::~OracleClient() {
  if (to_child_ != nullptr) std::fclose(to_child_);
  if (from_child_ != nullptr) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::uint64_t OracleClient::query(OracleInvariant inv, const Graph& g) {
  const std::string request = format_request(inv, g);
  std::lock_guard lock(mutex_);
  ++requests_;
  if (std::fputs(request.c_str(), to_child_) < 0 || std::fflush(to_child_) != 0) {
    throw OracleTransportError("oracle '" + command_ + "' is not accepting requests");
  }
  char* buffer = nullptr;
  std::size_t capacity = 0;
  const ssize_t got = getline(&buffer, &capacity, from_child_);
  std::string line = got > 0 ? std::string(buffer, static_cast<std::size_t>(got)) : "";
  std::free(buffer);
  if (got <= 0) {
    throw OracleTransportError("oracle '" + command_ + "' exited before replying to " +
                               request.substr(0, request.size() - 1));
  }
  if (line.back() != '\n') {
    throw OracleProtocolError("unterminated oracle reply: '" + line + "'");
  }
  return parse_reply(line);
}

OraclePool::OraclePool(const std::string& command, int processes) {
  if (processes < 1) processes = 1;
  for (int i = 0; i < processes; ++i) clients_.push_back(std::make_unique<OracleClient>(command));
}

std::uint64_t OraclePool::query(OracleInvariant inv, const Graph& g) {
  std::size_t slot = 0;
  {
    std::lock_guard lock(next_mutex_);
    slot = next_++ % clients_.size();
  }
  return clients_[slot]->query(inv, g);
}

std::vector<std::uint64_t> OraclePool::query_batch(OracleInvariant inv,
                                                   const std::vector<Graph>& graphs) {
  std::vector<std::uint64_t> out(graphs.size());
  const std::size_t p = clients_.size();
  parallel_for(p, static_cast<int>(p), [&](std::size_t c) {
    for (std::size_t i = c; i < graphs.size(); i += p) out[i] = clients_[c]->query(inv, graphs[i]);
  });
  return out;
}

std::uint64_t OraclePool::requests() const {
  std::uint64_t total = 0;
  for (const auto& c : clients_) total += c->requests();
  return total;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

}  // namespace

std::string stub_oracle_command(const std::string& stub_binary, const std::string& table,
                                const std::string& transcript) {
  std::string cmd = shell_quote(stub_binary) + " --table " + shell_quote(table);
  if (!transcript.empty()) cmd += " --transcript " + shell_quote(transcript);
  return "exec " + cmd;
}

OracleTable OracleTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open oracle table '" + path + "'");
  return parse(in, path);
}

OracleTable OracleTable::parse(std::istream& in, const std::string& origin) {
  OracleTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string n_text;
    std::string code_text;
    std::string inv_text;
    std::string value_text;
    if (!(fields >> n_text)) continue;
    std::string extra;
    if (!(fields >> code_text >> inv_text >> value_text) || (fields >> extra)) {
      throw UsageError(origin + ":" + std::to_string(line_no) +
                       ": expected 'n code invariant value'");
    }
    const auto inv = parse_invariant(inv_text);
    if (!inv) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": unknown invariant '" +
                       inv_text + "'");
    }
    const int n = std::stoi(n_text);
    const BigInt code = parse_bigint(code_text);
    const std::uint64_t value = std::stoull(value_text);
    table.add(*inv, decode_int(code, n), value);
    table.entries_.push_back({n, code, *inv, value});
  }
  return table;
}

void OracleTable::add(OracleInvariant inv, const Graph& g, std::uint64_t value) {
  const CanonicalCode code = canonical_code(g);
  values_[{inv, code.limbs}] = value;
}

std::optional<std::uint64_t> OracleTable::lookup(OracleInvariant inv, const Graph& g) const {
  const auto it = values_.find({inv, canonical_code(g).limbs});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string answer(const OracleTable& table, const std::string& request) {
  std::istringstream fields(request);
  std::string inv_text;
  std::string n_text;
  std::string code_text;
  std::string extra;
  if (!(fields >> inv_text >> n_text >> code_text) || (fields >> extra)) {
    return "ERR malformed request";
  }
  const auto inv = parse_invariant(inv_text);
  if (!inv || inv_text != protocol_name(*inv)) return "ERR unsupported invariant " + inv_text;
  try {
    const int n = std::stoi(n_text);
    const Graph g = decode_int(parse_bigint(code_text), n);
    // Keys are compared per order; an n-vertex table entry never answers for m != n.
    const auto value = table.lookup(*inv, g);
    if (!value) return "ERR unknown";
    return "OK " + std::to_string(*value);
  } catch (const std::exception&) {
    return "ERR malformed request";
  }
}

}  // namespace

void serve_oracle(const OracleTable& table, std::istream& in, std::ostream& out,
                  std::ostream* transcript) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string reply = answer(table, line);
    out << reply << '\n' << std::flush;
    if (transcript != nullptr) *transcript << line << '\n' << reply << '\n' << std::flush;
  }
}

}  // namespace rigid
