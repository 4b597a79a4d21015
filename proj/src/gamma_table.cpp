#include "fracctl/gamma_table.hpp"

namespace fracctl::detail {

// Gamma(s/q) in double-double precision for reduced fractions s/q, q <= 24.
const GammaTableEntry kGammaTable[] = {
    {1, 1, 1, 0},
    {2, 1, 1.7724538509055161, -7.6665864998257987e-17},
    {3, 1, 2.6789385347077475, 1.7947798648225244e-16},
    {3, 2, 1.3541179394264005, -4.6231203911366416e-17},
    {4, 1, 3.6256099082219082, 1.0555907647086408e-16},
    {4, 3, 1.2254167024651776, 2.1513199982961411e-18},
    {5, 1, 4.5908437119988035, -4.2482015259757148e-16},
    {5, 2, 2.2181595437576882, 2.1777046154786542e-17},
    {5, 3, 1.4891922488128171, 1.4783395427759045e-17},
    {5, 4, 1.1642297137253035, -1.096929776767215e-16},
    {6, 1, 5.5663160017802351, 9.219926493702184e-17},
    {6, 5, 1.128787029908126, 6.2981878288613415e-19},
    {7, 1, 6.5480629402478243, 1.2264872084699773e-16},
    {7, 2, 3.1491151177599366, 1.3612720047986743e-17},
    {7, 3, 2.0675117265602294, -5.9516890418442833e-17},
    {7, 4, 1.558581032902475, 4.7297807701106091e-17},
    {7, 5, 1.2759926754934441, -2.5526379328041123e-17},
    {7, 6, 1.1057670723295674, -6.4289383632540465e-17},
    {8, 1, 7.5339415987976119, -3.3510454171475427e-17},
    {8, 3, 2.3704361844166009, 4.2048527353016947e-17},
    {8, 5, 1.4345188480905569, -7.7245130267849708e-17},
    {8, 7, 1.0896523574228969, 5.1233549573036731e-17},
    {9, 1, 8.5226881392194755, 4.0560895668769601e-16},
    {9, 2, 4.1065795667160616, -4.1672056288832649e-16},
    {9, 4, 1.9928935227569227, 9.3688359690224947e-17},
    {9, 5, 1.6007161184139833, -2.3540228060501578e-17},
    {9, 7, 1.1901511869128727, 2.0680099583247475e-17},
    {9, 8, 1.0777588331334957, 5.5594051363279728e-17},
    {10, 1, 9.5135076986687324, -5.2340002536846922e-16},
    {10, 3, 2.9915689876875908, -2.020918440153423e-16},
    {10, 7, 1.2980553326475577, 1.0537776385548969e-16},
    {10, 9, 1.0686287021193193, 9.2332760165814332e-17},
    {11, 1, 10.505874856078686, -4.610653000112229e-16},
    {11, 2, 5.0776078371901079, -1.9374682812352623e-16},
    {11, 3, 3.3073537869576461, -2.0725513472650811e-16},
    {11, 4, 2.44710610948517, 1.8693281979168035e-16},
    {11, 5, 1.9483744729904546, -4.1274910908812069e-17},
    {11, 6, 1.628998124608686, -2.4221045964376465e-17},
    {11, 7, 1.4113390029041892, 8.5851703610074607e-17},
    {11, 8, 1.2568727418003687, 5.3828014601706906e-17},
    {11, 9, 1.1444106374375718, 6.591800247973416e-17},
    {11, 10, 1.0614037379121566, 9.3125373159096085e-18},
    {12, 1, 11.49942818607399, 6.8689595881179948e-16},
    {12, 5, 2.1275570586022221, -1.348858787742933e-16},
    {12, 7, 1.5287091970871109, 5.5849239382754403e-17},
    {12, 11, 1.0555465648134663, -1.2489079713788745e-17},
    {13, 1, 12.493910817096539, 1.5396863753834647e-16},
    {13, 2, 6.0565668311407146, 9.6763033840089098e-18},
    {13, 3, 3.9458418500639518, 4.8082246052969514e-17},
    {13, 4, 2.9130836267498688, 2.1014702302841647e-16},
    {13, 5, 2.3093471303055568, 7.1396607252673192e-17},
    {13, 6, 1.9188069293719021, 5.9553179973404339e-17},
    {13, 7, 1.6492887262555007, 1.0785161767279308e-16},
    {13, 8, 1.4549279883039161, -3.0114450646636979e-17},
    {13, 9, 1.3104051742077325, 3.9443034164611846e-17},
    {13, 10, 1.2006497380227714, -3.4505070215638659e-17},
    {13, 11, 1.116166621722076, 1.0215684294548191e-16},
    {13, 12, 1.0507039018587203, 9.1174594477167677e-17},
    {14, 1, 13.48913513027407, -5.4634321600972148e-16},
    {14, 3, 4.2676802863631274, -1.4542375306537811e-16},
    {14, 5, 2.4932626699081242, -1.7685419719043453e-16},
    {14, 9, 1.3985308582668068, 1.9983535889016025e-17},
    {14, 11, 1.1806703081724457, 2.6674423686828714e-17},
    {14, 13, 1.046634131488825, -5.8876954107954699e-18},
    {15, 1, 14.484960871964619, 3.1862943528962384e-16},
    {15, 2, 7.0405791214112456, -3.9923795390401837e-17},
    {15, 4, 3.3867081127315619, 9.3886948373999732e-17},
    {15, 7, 1.8977443680796136, 9.7826603967140299e-17},
    {15, 8, 1.6645537077246297, -1.0594827311366755e-16},
    {15, 11, 1.2482415835806182, 1.1796955565554853e-17},
    {15, 13, 1.0970544649822269, 8.8820480944007702e-17},
    {15, 14, 1.0431665101983292, 1.2588041892881795e-18},
    {16, 1, 15.481281081592398, 3.5920635644660483e-16},
    {16, 3, 4.9151134738142295, 1.4784728312386986e-17},
    {16, 5, 2.866091743937027, 2.0936219741057099e-16},
    {16, 7, 2.0248105608511469, -1.4755772440360355e-16},
    {16, 9, 1.5819455677601235, 4.8131737669367617e-17},
    {16, 11, 1.3182974223105899, -2.4486986366911178e-17},
    {16, 13, 1.1504754492745264, 8.6656312531304698e-17},
    {16, 15, 1.0401770111867672, -2.6055005850681042e-17},
    {17, 1, 16.478012759093499, -1.3365427417526364e-17},
    {17, 2, 8.0280140815153604, -3.6843698336203888e-16},
    {17, 3, 5.2403169661914779, -3.7786908644811979e-16},
    {17, 4, 3.865620566317864, 1.412928461330175e-16},
    {17, 5, 3.0544988211694823, -1.0241851427491444e-16},
    {17, 6, 2.5240949166732811, 1.514158096512406e-17},
    {17, 7, 2.1533802173548926, -9.6138353663962807e-17},
    {17, 8, 1.8819796261695074, -2.5527148455613692e-17},
    {17, 9, 1.6764536147993117, -1.9275748107934246e-17},
    {17, 10, 1.5168156542488511, 3.3271200422138405e-17},
    {17, 11, 1.3904069375586183, 1.6748298206327578e-18},
    {17, 12, 1.2888359573622885, 5.0639936584821683e-17},
    {17, 13, 1.2063321724018545, -6.2269693021242252e-17},
    {17, 14, 1.1388064050157778, 6.9451709785476302e-17},
    {17, 15, 1.083287945209686, 2.3170603362354702e-17},
    {17, 16, 1.0375734010971487, -7.6620767997703153e-17},
    {18, 1, 17.475090507152988, -4.4847311829175523e-16},
    {18, 5, 3.2439804598162421, -1.378064634085502e-16},
    {18, 7, 2.2832372126759397, -6.4431432296955962e-17},
    {18, 11, 1.4642425471883631, -6.7212292349842563e-17},
    {18, 13, 1.264205503365196, 2.0129573120727169e-17},
    {18, 17, 1.0352856848522987, -1.7820552894269184e-17},
    {19, 1, 18.472462097042467, 2.8870059880801253e-17},
    {19, 2, 9.0178764081537164, 7.7950825881226453e-16},
    {19, 3, 5.8929985698711729, -4.1477116458329401e-16},
    {19, 4, 4.348356388388126, -3.1508756606205448e-16},
    {19, 5, 3.4343908266933245, -6.3945677445891326e-17},
    {19, 6, 2.8348070479039489, 1.2226305019067316e-16},
    {19, 7, 2.4142070792281025, 4.5368058564441706e-17},
    {19, 8, 2.1050051621425143, -2.0947737491001265e-16},
    {19, 9, 1.8697376606187324, 9.0792877688720493e-17},
    {19, 10, 1.6859903001944678, 1.0940769818763313e-16},
    {19, 11, 1.5395492020490755, -1.0930245382636284e-16},
    {19, 12, 1.4209780315665486, -1.9264066445921857e-17},
    {19, 13, 1.3237761089314053, -7.7699476445881379e-17},
    {19, 14, 1.2433267759374136, -1.0844283561446317e-16},
    {19, 15, 1.1762670736358114, 5.3892985776339117e-17},
    {19, 16, 1.1200942934733165, -6.6563080142007921e-17},
    {19, 17, 1.072911783619404, 1.5047051227905932e-17},
    {19, 18, 1.0332597960325474, 8.3838671188757221e-18},
    {20, 1, 19.470085311255513, -1.4128783944696117e-16},
    {20, 3, 6.2202728740498774, 2.3001561865579116e-16},
    {20, 7, 2.5461469772122882, -1.9290362978078978e-16},
    {20, 9, 1.9681364006023825, -9.0931263835455896e-17},
    {20, 11, 1.6161242687335751, 6.9542341512049931e-17},
    {20, 13, 1.3847951020265099, 9.7496321393861189e-17},
    {20, 17, 1.1124837369484653, -5.4211794250742163e-18},
    {20, 19, 1.0314533171290321, 9.7190282942011418e-17},
    {21, 1, 20.467925653438638, 4.4747764113663562e-16},
    {21, 2, 10.009523409213335, 6.2196986551141552e-16},
    {21, 4, 4.8339524171390069, 1.3529321651663473e-16},
    {21, 5, 3.8175379131969165, -1.9050038007880779e-16},
    {21, 8, 2.3322287754822, 1.4289411961793577e-16},
    {21, 10, 1.8599565892401222, -6.9830680166882976e-17},
    {21, 11, 1.6938039491100545, 4.5993767295178228e-17},
    {21, 13, 1.4470646694102849, -5.6223423088386369e-17},
    {21, 16, 1.2098939163234566, -8.9216210719545413e-17},
    {21, 17, 1.1536983889928316, -1.0825020047000251e-16},
    {21, 19, 1.0648171450041939, 7.2140919117007867e-17},
    {21, 20, 1.0298325074527743, -5.7706157515329645e-17},
    {22, 1, 21.465954659714335, -5.6785032304600711e-16},
    {22, 3, 6.8763053294942358, -2.6914624508803444e-16},
    {22, 5, 4.0100911017658589, 4.3928193156468668e-16},
    {22, 7, 2.8124826172506689, -5.302425602252232e-17},
    {22, 9, 2.1677487080754343, -1.2404562109790948e-16},
    {22, 13, 1.5104249046880196, -1.0836963636449956e-16},
    {22, 15, 1.3278014075988773, 4.6932704563002877e-17},
    {22, 17, 1.1963181262763158, 2.7129807809771389e-17},
    {22, 19, 1.0997970044117662, 2.5964556451773773e-17},
    {22, 21, 1.0283701956640343, 7.8250940733359874e-17},
    {23, 1, 22.464148634793812, -4.9624424832964036e-16},
    {23, 2, 11.002521256583087, -5.9190317232391612e-16},
    {23, 3, 7.2049466421793928, 2.9971268477337546e-17},
    {23, 4, 5.3217469131936506, 2.780884697765922e-16},
    {23, 5, 4.2031986257218978, 3.8868455008387515e-16},
    {23, 6, 3.4662074327459886, -1.2586812662388105e-16},
    {23, 7, 2.9466954297359242, 1.1302115448174286e-16},
    {23, 8, 2.5627015466066987, -9.9707686995534933e-17},
    {23, 9, 2.2687508138304433, -1.247616253198974e-16},
    {23, 10, 2.0376038199693975, -1.6307850545979081e-16},
    {23, 11, 1.8519622757830754, 9.104547963550552e-17},
    {23, 12, 1.7003227256096034, -6.1007391663360951e-17},
    {23, 13, 1.5747446232565934, 8.157968827281728e-17},
    {23, 14, 1.4695754704629267, 2.3486860972412964e-17},
    {23, 15, 1.3806863009061163, -1.0761610817331679e-16},
    {23, 16, 1.3049941684637896, 6.6583849279586151e-17},
    {23, 17, 1.2401534127878835, 4.206081032738026e-17},
    {23, 18, 1.1843500298276233, 8.1968811081177636e-17},
    {23, 19, 1.1361611333693613, 1.3013577677218109e-17},
    {23, 20, 1.0944567044368259, 6.2816095276441159e-17},
    {23, 21, 1.0583295162670372, 1.344518014598084e-17},
    {23, 22, 1.0270442573520617, 1.0079108807737391e-16},
    {24, 1, 23.46248769318332, -6.6434852796707945e-17},
    {24, 5, 4.3968001000002523, 1.6561134653706742e-16},
    {24, 7, 3.0815055600034351, 8.4628705665873231e-17},
    {24, 11, 1.9322353352363753, 9.077544618097117e-17},
    {24, 13, 1.6399148048748842, 4.065329588523093e-17},
    {24, 17, 1.2850506996660505, 6.207923397290885e-17},
    {24, 19, 1.1737241052110612, -1.0956094959805857e-17},
    {24, 23, 1.0258364967528903, -6.0338248482603448e-17},
};

const int kGammaTableSize = sizeof(kGammaTable) / sizeof(kGammaTable[0]);

}  // namespace fracctl::detail
