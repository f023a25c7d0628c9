// Copyright 2026 The evcoref Authors.
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

// Closed word lists for the synthetic generator.

#include "evcoref/synthetic.h"

namespace evcoref {
namespace synthetic_vocab {

const std::vector<EventFamily> &Families() {
  static const std::vector<EventFamily> kFamilies = {
      {"arrest",
       {"arrested", "detained", "apprehended"},
       {"Police tracked down the suspect.", "Officers obtained a warrant.",
        "Witnesses called the police.", "The suspect tried to flee."},
       {"The suspect was charged.", "A judge set bail.",
        "Detectives questioned the suspect.", "The suspect hired a lawyer."}},
      {"dismissal",
       {"fired", "dismissed", "sacked"},
       {"The manager reviewed poor results.", "Complaints piled up against him.",
        "The board held a private meeting.", "He missed several deadlines."},
       {"He cleaned out his office.", "The club searched for a replacement.",
        "He applied for other jobs.", "Fans reacted on social media."}},
      {"quake",
       {"shook", "rattled", "jolted"},
       {"Tectonic plates built up stress.", "Seismographs recorded small tremors.",
        "Animals behaved strangely.", "The fault line shifted underground."},
       {"Buildings collapsed downtown.", "Aftershocks rattled residents.",
        "Rescue teams searched the rubble.", "A tsunami warning was issued."}},
      {"rehab",
       {"entered", "admitted", "enrolled"},
       {"She decided to seek help for her addiction.",
        "Her family staged an intervention.", "She struggled with substance abuse.",
        "Her lawyer arranged a treatment program."},
       {"She is treated for her addiction.", "She attended group therapy meetings.",
        "Doctors monitored her recovery.", "She stayed away from alcohol."}},
      {"hiring",
       {"hired", "appointed", "recruited"},
       {"The firm posted a job opening.", "Candidates sent their resumes.",
        "The panel interviewed applicants.", "The previous director left."},
       {"The new hire signed a contract.", "He started work the next week.",
        "Colleagues welcomed the newcomer.", "The company announced the appointment."}},
      {"acquisition",
       {"acquired", "bought", "purchased"},
       {"Bankers valued the target company.", "The two firms negotiated terms.",
        "Regulators reviewed the proposal.", "Shareholders approved the offer."},
       {"The brands were merged.", "Some employees were laid off.",
        "The stock price jumped.", "Executives integrated the teams."}},
      {"launch",
       {"launched", "unveiled", "introduced"},
       {"Engineers designed the new device.", "The team tested early prototypes.",
        "Marketing prepared a campaign.", "Journalists received invitations."},
       {"Customers lined up at stores.", "Reviewers tested the device.",
        "Sales figures were reported.", "Competitors cut their prices."}},
      {"election",
       {"won", "captured", "clinched"},
       {"Candidates held campaign rallies.", "Voters went to the polls.",
        "Volunteers knocked on doors.", "The candidates debated on television."},
       {"Supporters celebrated the victory.", "The loser conceded the race.",
        "The winner was sworn in.", "Officials certified the results."}},
      {"crash",
       {"crashed", "collided", "smashed"},
       {"The driver lost control of the car.", "The road was covered in ice.",
        "The driver was speeding.", "A truck ran a red light."},
       {"Paramedics arrived at the scene.", "The injured were taken to hospital.",
        "Police closed the road.", "Tow trucks removed the wreckage."}},
      {"killing",
       {"killed", "murdered", "slain"},
       {"The attacker bought a weapon.", "An argument broke out.",
        "The attacker followed the victim.", "Neighbors heard shouting."},
       {"The victim's family mourned.", "Police opened a homicide inquiry.",
        "A funeral was held.", "The killer was hunted down."}},
      {"resignation",
       {"resigned", "quit", "abdicated"},
       {"A scandal damaged his reputation.", "Colleagues demanded he step down.",
        "He lost a confidence vote.", "He wrote a letter to the board."},
       {"An interim leader took over.", "He gave a farewell speech.",
        "Reporters asked about his future.", "The search for a successor began."}},
      {"sentencing",
       {"sentenced", "jailed", "imprisoned"},
       {"The jury reached a verdict.", "The defendant was found guilty.",
        "Lawyers made their closing arguments.", "The victims gave statements."},
       {"He was taken to prison.", "His lawyer filed an appeal.",
        "The family hugged in the courtroom.", "Guards escorted him out."}},
      {"rescue",
       {"rescued", "saved", "evacuated"},
       {"Hikers became trapped on the mountain.", "Someone called emergency services.",
        "Helicopters were dispatched.", "Volunteers formed a search party."},
       {"Survivors were treated for exposure.", "Families thanked the rescuers.",
        "The survivors were flown to safety.", "Officials praised the crews."}},
      {"boycott",
       {"boycotted", "picketed", "blockaded"},
       {"Workers demanded higher wages.", "Union leaders called a vote.",
        "Talks with management broke down.", "Activists printed protest signs."},
       {"Production ground to a halt.", "Management offered a new deal.",
        "Shelves stood empty.", "Negotiators returned to the table."}},
      {"album",
       {"released", "dropped", "debuted"},
       {"The band recorded new songs.", "Producers mixed the tracks.",
        "The label planned a tour.", "Fans heard a teaser single."},
       {"The album topped the charts.", "Critics reviewed the record.",
        "Fans streamed the songs.", "The band went on tour."}},
      {"nomination",
       {"nominated", "shortlisted", "named"},
       {"The committee watched every film.", "Voters submitted their ballots.",
        "The actor gave an acclaimed performance.", "Studios campaigned for votes."},
       {"She prepared an acceptance speech.", "The press contacted her for interviews.",
        "She bought a new gown.", "The ceremony was scheduled."}},
      {"injury",
       {"injured", "hurt", "sidelined"},
       {"The player landed awkwardly.", "A defender tackled him hard.",
        "He ignored a sore ankle.", "The pitch was slippery."},
       {"Doctors scanned his knee.", "He missed the next matches.",
        "He began physiotherapy.", "The coach picked a substitute."}},
      {"trade",
       {"traded", "swapped", "exchanged"},
       {"Scouts evaluated the player.", "Agents negotiated with both clubs.",
        "The team needed salary space.", "The player requested a move."},
       {"He passed a medical exam.", "He wore his new jersey.",
        "Fans bought his new shirt.", "He met his new teammates."}},
      {"flood",
       {"flooded", "inundated", "submerged"},
       {"Heavy rain fell for days.", "The river rose rapidly.",
        "Levees began to leak.", "Forecasters issued a warning."},
       {"Residents moved to shelters.", "Crews pumped out the water.",
        "Insurers assessed the damage.", "Roads were closed for weeks."}},
      {"robbery",
       {"robbed", "looted", "burgled"},
       {"The thieves watched the building.", "They disabled the alarm.",
        "The gang planned an escape route.", "They bought masks and gloves."},
       {"The owner called the police.", "Detectives dusted for fingerprints.",
        "Insurance covered the losses.", "Security cameras were reviewed."}},
  };
  return kFamilies;
}

const std::vector<std::string_view> &GenericHeads() {
  static const std::vector<std::string_view> kHeads = {
      "announced", "reported",  "confirmed", "revealed",  "claimed",
      "noted",     "stated",    "signaled",  "visited",   "met",
      "discussed", "planned",   "prepared",  "organized", "held",
      "hosted",    "attended",  "joined",    "left",      "returned",
      "moved",     "arrived",   "departed",  "traveled",  "opened",
      "closed",    "started",   "ended",     "finished",  "completed",
      "began",     "continued", "changed",   "approved",  "rejected",
      "accepted",  "refused",   "denied",    "handled",   "managed",
      "settled",   "resolved",  "caused",    "triggered", "followed",
      "preceded",  "marked",    "described", "called",    "termed",
      "covered",   "tracked",   "observed",  "witnessed", "recorded",
      "filmed",    "noticed",   "spotted",   "mentioned", "cited",
      "assessed",   "involved",  "affected",  "concerned", "touched",
      "shaped",    "defined",   "framed",    "sparked",   "prompted",
      "delivered", "staged",    "produced",  "performed", "executed",
      "conducted", "carried",   "pursued",   "undertook", "effected",
      "arranged", "sealed",    "wrapped",   "concluded", "finalized",
      "engineered", "orchestrated", "oversaw", "directed", "led",
  };
  return kHeads;
}

const std::vector<std::string_view> &GenericInferences() {
  static const std::vector<std::string_view> kGeneric = {
      "People talked about it.",       "Reporters wrote about the news.",
      "Someone made a phone call.",    "The day went on as usual.",
      "A crowd gathered nearby.",      "Officials issued a statement.",
      "People checked their phones.",  "The weather stayed cloudy.",
      "Traffic slowed down.",          "A spokesperson declined to comment.",
      "Neighbors shared the story.",   "The news spread online.",
      "Some people were surprised.",   "A meeting was held.",
      "Photos appeared in newspapers.", "Everyone went home.",
      "Experts gave their opinions.",  "Someone posted a video.",
      "The city was quiet.",           "Reporters asked questions.",
      "People waited for updates.",    "A press release went out.",
      "Friends sent messages.",        "The story made headlines.",
      "Commentators argued on television.", "Life returned to normal.",
      "A few people complained.",      "Records were updated.",
      "Officials reviewed the situation.", "Many people were curious.",
  };
  return kGeneric;
}

const std::vector<std::string_view> &Subjects() {
  static const std::vector<std::string_view> kSubjects = {
      "Garcia", "Smith",  "Johnson", "Nguyen", "Patel", "Kim",
      "Lopez",  "Walker", "Officials", "Authorities", "Investigators",
      "Reuters", "Chen",  "Okafor",  "Muller", "Rossi",
  };
  return kSubjects;
}

const std::vector<std::string_view> &Objects() {
  static const std::vector<std::string_view> kObjects = {
      "them",  "everyone", "the group", "the firm",  "the city",
      "the region", "the team", "the staff", "the club", "the crowd",
  };
  return kObjects;
}

const std::vector<std::string_view> &Places() {
  static const std::vector<std::string_view> kPlaces = {
      "Boston", "Denver", "Lagos", "Madrid", "Osaka", "Toronto",
      "Lima",   "Dublin", "Perth", "Austin", "Quito", "Nairobi",
  };
  return kPlaces;
}

const std::vector<std::string_view> &Days() {
  static const std::vector<std::string_view> kDays = {
      "Monday", "Tuesday", "Wednesday", "Thursday",
      "Friday", "Saturday", "Sunday",
  };
  return kDays;
}

const std::vector<std::vector<std::string_view>> &DistractorSentences() {
  static const std::vector<std::vector<std::string_view>> kDistractors = {
      {"The", "weather", "was", "mild", "."},
      {"More", "details", "are", "expected", "later", "."},
      {"The", "report", "was", "updated", "at", "noon", "."},
      {"This", "story", "is", "developing", "."},
      {"Readers", "can", "subscribe", "for", "alerts", "."},
      {"Photos", "accompany", "this", "article", "."},
      {"The", "office", "did", "not", "respond", "."},
      {"Local", "media", "carried", "the", "story", "."},
  };
  return kDistractors;
}

}  // namespace synthetic_vocab
}  // namespace evcoref
