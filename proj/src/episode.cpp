#include "ssp/episode.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "ssp/errors.hpp"

namespace ssp {

std::vector<std::pair<std::size_t, std::size_t>> pre_switch_pairs(const EpisodeLog& log) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& st : log.steps) {
    if (!st.pre_switch) continue;
    std::pair<std::size_t, std::size_t> key{st.state, st.action};
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  }
  return out;
}

std::string format_episode_log(const EpisodeLog& log) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << log.episode << ' ' << log.pre_switch_steps << ' ' << (log.switched ? 1 : 0) << ' ' << log.switch_state << ' '
      << log.terminal_cost << ' ' << log.incurred_cost << ' ' << log.stacked_cost << " |";
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& st = log.steps[i];
    out << (i == 0 ? " " : ";") << st.state << ',' << st.action << ',' << st.layer << ',' << st.cost << ','
        << st.next << ',' << (st.pre_switch ? 1 : 0) << ',' << (st.observed ? 1 : 0);
  }
  return out.str();
}

EpisodeLog parse_episode_log(const std::string& line) {
  EpisodeLog log;
  const auto bar = line.find('|');
  if (bar == std::string::npos) throw InvalidArgument("episode record lacks the step separator");
  std::istringstream head(line.substr(0, bar));
  int switched = 0;
  if (!(head >> log.episode >> log.pre_switch_steps >> switched >> log.switch_state >> log.terminal_cost >>
        log.incurred_cost >> log.stacked_cost))
    throw InvalidArgument("malformed episode record header");
  log.switched = switched != 0;

  std::istringstream body(line.substr(bar + 1));
  std::string item;
  while (std::getline(body, item, ';')) {
    std::istringstream fields(item);
    EpisodeStep st;
    char c1, c2, c3, c4, c5, c6;
    int pre = 0, obs = 0;
    if (!(fields >> st.state >> c1 >> st.action >> c2 >> st.layer >> c3 >> st.cost >> c4 >> st.next >> c5 >> pre >>
          c6 >> obs))
      throw InvalidArgument("malformed episode step: " + item);
    st.pre_switch = pre != 0;
    st.observed = obs != 0;
    log.steps.push_back(st);
  }
  return log;
}

}  // namespace ssp
