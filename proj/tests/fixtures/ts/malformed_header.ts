@problemName BadHeader
@equalLength maybe
@classLabel true a b
@data
1,2:a
