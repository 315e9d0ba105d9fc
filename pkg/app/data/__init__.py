# data package 