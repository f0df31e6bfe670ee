#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctdc/record.hpp"

namespace ctdc::test {

// Record with the initial state at time 0 followed by (time, state) events.
inline ProcessRecord make_record(std::string person, std::string task, const std::vector<std::pair<double, int>>& events) {
  ProcessRecord r;
  r.person_id = std::move(person);
  r.task_id = std::move(task);
  for (const auto& [t, s] : events) r.events.push_back({t, StateId(s)});
  return r;
}

// Student 17 on the second TICKETS task.
inline ProcessRecord student17_record() {
  return make_record("17", "tickets-task2", {{7.3, 2}, {17.1, 7}, {27.1, 8}, {32.9, 21}});
}

inline const char* student17_csv() {
  return "person_id,task_id,time,state_id\n"
         "17,tickets-task2,0,1\n"
         "17,tickets-task2,7.3,2\n"
         "17,tickets-task2,17.1,7\n"
         "17,tickets-task2,27.1,8\n"
         "17,tickets-task2,32.9,21\n";
}

}  // namespace ctdc::test
