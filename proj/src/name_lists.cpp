// Copyright (c) 2026 The ctxspell Authors
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

#include "ctxspell/simdata.hpp"

namespace ctxspell {

// Given names and surnames used to populate the synthetic name inventory.
// Includes clusters of near-homophones (jon/john, jane/jan, ...).
const std::vector<std::string>& base_given_names() {
  static const std::vector<std::string> names = {
      "john", "jon", "jane", "june", "joe", "joan", "sam", "dong", "jan", "jean",
      "joanne", "johnny", "jonah", "jo", "joy", "joey", "jake", "jade", "james", "jamie",
      "mary", "marie", "mario", "maria", "mark", "marc", "marco", "marcus", "martin", "marty",
      "peter", "pete", "petra", "paul", "paula", "pauline", "paolo", "pablo", "pam", "pat",
      "anna", "ann", "anne", "annie", "hannah", "hana", "ana", "andy", "andrew", "andre",
      "sara", "sarah", "sera", "sean", "shawn", "shaun", "shane", "sheena", "shay", "shea",
      "chris", "kris", "christa", "krista", "christine", "kristen", "kirsten", "kristin", "cristina", "tina",
      "katie", "katy", "kate", "cate", "kat", "cathy", "kathy", "kathleen", "caitlin", "kaitlyn",
      "steven", "stephen", "stefan", "steve", "stevie", "stella", "stacy", "stacey", "tracy", "tracey",
      "eric", "erik", "erica", "erika", "erin", "aaron", "aron", "arun", "aryan", "ryan",
      "brian", "bryan", "brianna", "bri", "ian", "iain", "evan", "ivan", "yvonne", "yvette",
      "alan", "allan", "allen", "ellen", "helen", "helena", "elena", "elaine", "alaina", "lena",
      "nick", "nicky", "nikki", "nico", "nicole", "nicola", "niko", "nina", "nino", "neil",
      "dan", "danny", "dani", "daniel", "danielle", "dana", "dane", "dean", "deana", "diana",
      "tom", "tommy", "tomas", "thomas", "tim", "timmy", "tammy", "tam", "tami", "toni",
      "mike", "mikey", "michael", "michelle", "micah", "mick", "mia", "maya", "mya", "mina",
      "lee", "leigh", "leah", "lia", "leo", "leon", "leona", "leonard", "lenny", "len",
      "ben", "benny", "benji", "bennett", "beth", "betty", "bette", "bess", "tess", "tessa",
      "rob", "robbie", "robert", "roberta", "robin", "robyn", "ruby", "rudy", "rudi", "judy",
      "will", "willy", "william", "willa", "wilma", "walt", "walter", "wally", "wendy", "windy",
      "carl", "karl", "carla", "karla", "carly", "carol", "carole", "carolyn", "karen", "karin",
      "gary", "garry", "gerry", "jerry", "jeri", "geri", "gina", "jenna", "jenny", "jen",
      "lisa", "liza", "lise", "elise", "eliza", "ella", "elle", "ellie", "ali", "allie",
      "max", "maxine", "mack", "mac", "matt", "matthew", "mattie", "maddie", "madison", "addison",
      "ray", "rae", "raymond", "ramon", "ramona", "rhonda", "ronda", "ron", "ronnie", "roni",
      "lou", "louis", "louise", "luis", "luisa", "lucy", "lucia", "luca", "lucas", "luke",
      "dave", "david", "davis", "davy", "dev", "devin", "devon", "kevin", "kevan", "gavin",
      "ali", "alex", "alexa", "alexis", "alec", "alice", "alicia", "alisha", "elisa", "felicia",
      "ted", "teddy", "ed", "eddie", "eddy", "edward", "edwin", "edith", "edie", "eden",
      "greg", "gregg", "craig", "grace", "gracie", "gray", "grey", "greta", "gretchen", "gideon",
      "rose", "rosa", "rosie", "ross", "russ", "rusty", "ruth", "ruthie", "rita", "reta",
      "omar", "omer", "oscar", "otto", "owen", "olga", "olive", "oliver", "olivia", "ollie",
      "wei", "wang", "wong", "ming", "mei", "lin", "ling", "ling", "li", "yan",
      "raj", "ravi", "rahul", "rohan", "rina", "riya", "priya", "preeti", "arjun", "anil",
      "hugo", "hugh", "huey", "hank", "hanna", "holly", "hollie", "hailey", "haley", "hayley",
      "zoe", "zoey", "zara", "sarai", "zach", "zack", "jack", "jackie", "jac", "jacques",
      "fred", "freddy", "frida", "freda", "frank", "franco", "francis", "frances", "fran", "franz",
      "gus", "gussie", "guy", "gail", "gale", "dale", "dahlia", "dalia", "della", "stella",
      "bill", "billy", "bella", "bell", "belle", "bo", "beau", "bob", "bobby", "bobbie",
      "nate", "nathan", "natalie", "natalia", "nat", "nadia", "nadine", "nadja", "noah", "nora",
  };
  return names;
}

const std::vector<std::string>& base_surnames() {
  static const std::vector<std::string> names = {
      "smith", "smyth", "smit", "jones", "joness", "brown", "braun", "browne", "lee", "li",
      "chen", "chan", "chang", "cheng", "zhang", "wang", "wong", "kim", "kimm", "park",
      "parker", "baker", "barker", "walker", "walters", "waters", "carter", "cartier", "clark", "clarke",
      "hall", "hale", "hill", "hull", "king", "kingston", "scott", "scot", "adams", "addams",
      "nelson", "neilson", "nielsen", "olson", "olsen", "ellison", "allison", "mason", "madsen", "mattson",
      "reed", "reid", "read", "reyes", "reese", "rice", "price", "pryce", "bryce", "brice",
      "patel", "patil", "shah", "shaw", "singh", "sing", "gupta", "kumar", "kumari", "rao",
      "garcia", "garza", "gomez", "gomes", "lopez", "lopes", "perez", "peres", "diaz", "dias",
      "murphy", "murray", "moore", "moor", "more", "morris", "morrison", "harris", "harrison", "harrington",
      "young", "yang", "yong", "long", "lang", "lange", "green", "greene", "gray", "grey",
  };
  return names;
}

}  // namespace ctxspell
