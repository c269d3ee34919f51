#ifndef SIGGAN_CONFIG_HPP
#define SIGGAN_CONFIG_HPP

// Flat `key = value` configuration text. Blank lines and lines starting with
// '#' are ignored. Unknown keys are errors.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "siggan/error.hpp"
#include "siggan/model.hpp"

namespace siggan {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<ConfigEntry> parse_entries(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out.push_back({std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))),
                   line_no});
  }
  return out;
}

namespace detail {

inline std::string where(const ConfigEntry& e) {
  return "config line " + std::to_string(e.line) + " ('" + e.key + "')";
}

template <typename T>
T parse_number(const ConfigEntry& e) {
  T v{};
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(where(e) + ": cannot parse '" + e.value + "' as a number");
  }
  return v;
}

inline bool parse_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ConfigError(where(e) + ": expected true or false, got '" + e.value + "'");
}

inline std::vector<std::size_t> parse_list(const ConfigEntry& e, std::size_t expected) {
  std::vector<std::size_t> out;
  std::string_view rest = e.value;
  if (!rest.empty() && rest.front() == '[') rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == ']') rest.remove_suffix(1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    out.push_back(parse_number<std::size_t>(ConfigEntry{e.key, std::string(item), e.line}));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.size() != expected) {
    throw ConfigError(where(e) + ": expected " + std::to_string(expected) + " comma-separated values");
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "mse" || s == "MSE") return LossKind::Mse;
  if (s == "kld" || s == "KLD") return LossKind::Kld;
  throw ConfigError("unknown loss '" + std::string(s) + "' (expected mse or kld)");
}

inline std::string to_string(LossKind k) { return k == LossKind::Mse ? "mse" : "kld"; }

inline GraphDirection parse_direction(std::string_view s) {
  if (s == "undirected") return GraphDirection::Undirected;
  if (s == "left_to_right") return GraphDirection::LeftToRight;
  throw ConfigError("unknown graph_direction '" + std::string(s) +
                    "' (expected undirected or left_to_right)");
}

inline std::string to_string(GraphDirection d) {
  return d == GraphDirection::Undirected ? "undirected" : "left_to_right";
}

/// Applies one entry; false when the key is not a model key.
inline bool apply_entry(SigGanConfig& c, const ConfigEntry& e) {
  using detail::parse_bool;
  using detail::parse_number;
  const std::string& k = e.key;
  if (k == "loss") {
    c.loss_kind = parse_loss_kind(e.value);
  } else if (k == "batch_size") {
    c.batch_size = parse_number<std::size_t>(e);
  } else if (k == "learning_rate") {
    c.learning_rate = parse_number<double>(e);
  } else if (k == "neurons") {
    const auto v = detail::parse_list(e, 3);
    c.gnn_neurons = v[0];
    c.geo_lstm_neurons = v[1];
    c.rec_lstm_neurons = v[2];
  } else if (k == "layers") {
    const auto v = detail::parse_list(e, 2);
    c.gnn_layers = v[0];
    c.rec_lstm_layers = v[1];
  } else if (k == "gnn_neurons") {
    c.gnn_neurons = parse_number<std::size_t>(e);
  } else if (k == "geo_lstm_neurons") {
    c.geo_lstm_neurons = parse_number<std::size_t>(e);
  } else if (k == "rec_lstm_neurons") {
    c.rec_lstm_neurons = parse_number<std::size_t>(e);
  } else if (k == "gnn_layers") {
    c.gnn_layers = parse_number<std::size_t>(e);
  } else if (k == "rec_lstm_layers") {
    c.rec_lstm_layers = parse_number<std::size_t>(e);
  } else if (k == "dropout") {
    c.dropout = parse_number<double>(e);
  } else if (k == "seq_len") {
    c.seq_len = parse_number<std::size_t>(e);
  } else if (k == "graph_direction") {
    c.graph_direction = parse_direction(e.value);
  } else if (k == "epochs") {
    c.epochs = parse_number<std::size_t>(e);
  } else if (k == "sig_degree") {
    c.sig_degree = parse_number<std::size_t>(e);
  } else if (k == "noise_features") {
    c.noise_features = parse_number<std::size_t>(e);
  } else if (k == "skip_layer") {
    c.skip_layer = parse_bool(e);
  } else if (k == "disable_geometric") {
    c.ablation.geometric = parse_bool(e);
  } else if (k == "disable_recurrent") {
    c.ablation.recurrent = parse_bool(e);
  } else if (k == "disable_feedforward") {
    c.ablation.feedforward = parse_bool(e);
  } else if (k == "disable_skip") {
    c.ablation.skip = parse_bool(e);
  } else if (k == "disable_dropout") {
    c.ablation.dropout = parse_bool(e);
  } else if (k == "seed") {
    c.seed = parse_number<std::uint64_t>(e);
  } else if (k == "grad_clip") {
    c.grad_clip = parse_number<double>(e);
  } else if (k == "dis_anchor") {
    c.dis_anchor = parse_number<double>(e);
  } else if (k == "rms_decay") {
    c.rms_decay = parse_number<double>(e);
  } else if (k == "rms_epsilon") {
    c.rms_epsilon = parse_number<double>(e);
  } else {
    return false;
  }
  return true;
}

/// Starts from the tuned defaults of the configured loss (MSE when absent),
/// then applies every entry. `extra` gets keys the model does not know; it
/// returns false to reject them.
inline SigGanConfig parse_sig_gan_config(
    const std::vector<ConfigEntry>& entries,
    const std::function<bool(const ConfigEntry&)>& extra = nullptr) {
  LossKind kind = LossKind::Mse;
  for (const auto& e : entries) {
    if (e.key == "loss") kind = parse_loss_kind(e.value);
  }
  SigGanConfig c = SigGanConfig::defaults(kind);
  for (const auto& e : entries) {
    if (apply_entry(c, e)) continue;
    if (extra && extra(e)) continue;
    throw ConfigError(detail::where(e) + ": unknown key");
  }
  c.validate();
  return c;
}

inline SigGanConfig parse_sig_gan_config(std::string_view text) {
  return parse_sig_gan_config(parse_entries(text));
}

/// Round-trips exactly through parse_sig_gan_config.
inline std::string to_text(const SigGanConfig& c) {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "loss = " << to_string(c.loss_kind) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "learning_rate = " << detail::format_double(c.learning_rate) << '\n'
     << "gnn_neurons = " << c.gnn_neurons << '\n'
     << "geo_lstm_neurons = " << c.geo_lstm_neurons << '\n'
     << "rec_lstm_neurons = " << c.rec_lstm_neurons << '\n'
     << "gnn_layers = " << c.gnn_layers << '\n'
     << "rec_lstm_layers = " << c.rec_lstm_layers << '\n'
     << "dropout = " << detail::format_double(c.dropout) << '\n'
     << "seq_len = " << c.seq_len << '\n'
     << "graph_direction = " << to_string(c.graph_direction) << '\n'
     << "epochs = " << c.epochs << '\n'
     << "sig_degree = " << c.sig_degree << '\n'
     << "noise_features = " << c.noise_features << '\n'
     << "skip_layer = " << b(c.skip_layer) << '\n'
     << "disable_geometric = " << b(c.ablation.geometric) << '\n'
     << "disable_recurrent = " << b(c.ablation.recurrent) << '\n'
     << "disable_feedforward = " << b(c.ablation.feedforward) << '\n'
     << "disable_skip = " << b(c.ablation.skip) << '\n'
     << "disable_dropout = " << b(c.ablation.dropout) << '\n'
     << "seed = " << c.seed << '\n'
     << "grad_clip = " << detail::format_double(c.grad_clip) << '\n'
     << "dis_anchor = " << detail::format_double(c.dis_anchor) << '\n'
     << "rms_decay = " << detail::format_double(c.rms_decay) << '\n'
     << "rms_epsilon = " << detail::format_double(c.rms_epsilon) << '\n';
  return os.str();
}

}  // namespace siggan

#endif  // SIGGAN_CONFIG_HPP
